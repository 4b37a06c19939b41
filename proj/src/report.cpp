#include "visampler/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "visampler/emb_io.hpp"

namespace visampler {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ContractViolation("bad number '" + s + "' in results CSV");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) throw ContractViolation("mean of an empty sample");
  // Shifted by the first value so identical samples give exactly that value.
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double mean = shift + sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::vector<RoundAggregate> aggregate(const ExperimentResult& result) {
  if (result.runs.size() < 2) {
    throw ContractViolation("aggregation needs at least 2 seeds, got " +
                            std::to_string(result.runs.size()));
  }
  const auto& first = result.runs.front();
  for (const auto& run : result.runs) {
    if (run.arms.size() != first.arms.size()) {
      throw ContractViolation("seed " + std::to_string(run.seed) + " ran a different arm count");
    }
    for (std::size_t a = 0; a < run.arms.size(); ++a) {
      if (!(run.arms[a].arm == first.arms[a].arm)) {
        throw ContractViolation("seed " + std::to_string(run.seed) + " ran different arms");
      }
      if (run.arms[a].records.size() != first.arms[a].records.size()) {
        throw ContractViolation("seed " + std::to_string(run.seed) + " has " +
                                std::to_string(run.arms[a].records.size()) + " rounds for " +
                                run.arms[a].arm.label() + ", expected " +
                                std::to_string(first.arms[a].records.size()));
      }
    }
  }
  std::vector<RoundAggregate> out;
  for (std::size_t a = 0; a < first.arms.size(); ++a) {
    for (std::size_t r = 0; r < first.arms[a].records.size(); ++r) {
      std::vector<double> acc1, acc10;
      for (const auto& run : result.runs) {
        acc1.push_back(run.arms[a].records[r].acc1);
        acc10.push_back(run.arms[a].records[r].acc10);
      }
      RoundAggregate agg;
      agg.round = first.arms[a].records[r].round;
      agg.arm = first.arms[a].arm;
      std::tie(agg.mean_acc1, agg.std_acc1) = mean_and_std(acc1);
      std::tie(agg.mean_acc10, agg.std_acc10) = mean_and_std(acc10);
      agg.n_seeds = result.runs.size();
      out.push_back(agg);
    }
  }
  return out;
}

std::string results_csv(const std::vector<RoundAggregate>& aggregates) {
  std::string out = "round,strategy,alpha,mean_acc1,std_acc1,mean_acc10,std_acc10\n";
  for (const auto& a : aggregates) {
    out += std::to_string(a.round) + "," + std::string(to_string(a.arm.strategy)) + "," +
           shortest(a.arm.alpha) + "," + shortest(a.mean_acc1) + "," + shortest(a.std_acc1) + "," +
           shortest(a.mean_acc10) + "," + shortest(a.std_acc10) + "\n";
  }
  return out;
}

std::vector<RoundAggregate> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "round,strategy,alpha,mean_acc1,std_acc1,mean_acc10,std_acc10") {
    throw ContractViolation("results CSV has an unexpected header");
  }
  std::vector<RoundAggregate> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw ContractViolation("results CSV row has " + std::to_string(f.size()) + " fields");
    RoundAggregate a;
    a.round = static_cast<std::size_t>(parse_double(f[0]));
    a.arm = Arm{strategy_from_string(f[1]), parse_double(f[2])};
    a.mean_acc1 = parse_double(f[3]);
    a.std_acc1 = parse_double(f[4]);
    a.mean_acc10 = parse_double(f[5]);
    a.std_acc10 = parse_double(f[6]);
    out.push_back(a);
  }
  return out;
}

std::string rounds_csv(const ExperimentResult& result) {
  std::string out = "seed,strategy,alpha,round,labeled_size,acc1,acc10,wall_ms,selected\n";
  for (const auto& run : result.runs) {
    for (const auto& arm : run.arms) {
      for (const auto& r : arm.records) {
        std::string selected;
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
          if (i) selected += ';';
          selected += r.selected[i];
        }
        out += std::to_string(r.seed) + "," + std::string(to_string(r.arm.strategy)) + "," +
               shortest(r.arm.alpha) + "," + std::to_string(r.round) + "," +
               std::to_string(r.labeled_size) + "," + shortest(r.acc1) + "," + shortest(r.acc10) +
               "," + fixed(r.wall_ms, 1) + "," + selected + "\n";
      }
    }
  }
  return out;
}

std::string results_svg(const std::vector<RoundAggregate>& aggregates) {
  constexpr double width = 760, height = 440;
  constexpr double left = 60, right = 200, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  std::vector<Arm> arms;
  std::size_t max_round = 0;
  double y_top = 0.1;
  for (const auto& a : aggregates) {
    if (std::find(arms.begin(), arms.end(), a.arm) == arms.end()) arms.push_back(a.arm);
    max_round = std::max(max_round, a.round);
    y_top = std::max(y_top, a.mean_acc1 + a.std_acc1);
  }
  y_top = std::min(1.0, std::ceil(y_top * 10.0 - 1e-9) / 10.0);

  auto x_of = [&](std::size_t round) {
    return max_round == 0 ? left + pw / 2 : left + pw * static_cast<double>(round) / static_cast<double>(max_round);
  };
  auto y_of = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, y_top) / y_top); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
         fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(left, 0) + "\" y=\"24\" font-size=\"14\">mean acc@1 per round (band: &#177;1 std)</text>\n";

  // Axes and ticks.
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(left + pw) +
         "\" y2=\"" + fixed(top + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) +
         "\" y2=\"" + fixed(top + ph) + "\" stroke=\"black\"/>\n";
  for (std::size_t r = 0; r <= max_round; ++r) {
    svg += "<text x=\"" + fixed(x_of(r)) + "\" y=\"" + fixed(top + ph + 18) +
           "\" text-anchor=\"middle\">" + std::to_string(r) + "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double v = y_top * t / 5.0;
    svg += "<line x1=\"" + fixed(left - 4) + "\" y1=\"" + fixed(y_of(v)) + "\" x2=\"" + fixed(left + pw) +
           "\" y2=\"" + fixed(y_of(v)) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y_of(v) + 4) +
           "\" text-anchor=\"end\">" + fixed(v, 2) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(height - 10) +
         "\" text-anchor=\"middle\">AL round</text>\n";

  for (std::size_t i = 0; i < arms.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::vector<const RoundAggregate*> series;
    for (const auto& a : aggregates) {
      if (a.arm == arms[i]) series.push_back(&a);
    }
    std::sort(series.begin(), series.end(),
              [](const auto* a, const auto* b) { return a->round < b->round; });

    std::string band;
    for (const auto* a : series) {
      band += fixed(x_of(a->round)) + "," + fixed(y_of(a->mean_acc1 + a->std_acc1)) + " ";
    }
    for (auto it = series.rbegin(); it != series.rend(); ++it) {
      band += fixed(x_of((*it)->round)) + "," + fixed(y_of((*it)->mean_acc1 - (*it)->std_acc1)) + " ";
    }
    band.pop_back();
    svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

    std::string line;
    for (const auto* a : series) {
      line += fixed(x_of(a->round)) + "," + fixed(y_of(a->mean_acc1)) + " ";
    }
    line.pop_back();
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";

    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    svg += "<line x1=\"" + fixed(left + pw + 16) + "\" y1=\"" + fixed(ly) + "\" x2=\"" +
           fixed(left + pw + 40) + "\" y2=\"" + fixed(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(left + pw + 46) + "\" y=\"" + fixed(ly + 4) + "\">" +
           xml_escape(arms[i].label()) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::optional<CrossoverReport> crossover(const std::vector<RoundAggregate>& aggregates) {
  std::map<std::size_t, double> min_curve, max_curve;
  for (const auto& a : aggregates) {
    if (a.arm.strategy == Strategy::vi_min) min_curve[a.round] = a.mean_acc1;
    if (a.arm.strategy == Strategy::vi_max) max_curve[a.round] = a.mean_acc1;
  }
  if (min_curve.empty() || max_curve.empty()) return std::nullopt;

  CrossoverReport rep;
  std::vector<std::string> leaders;
  for (const auto& [round, min_acc] : min_curve) {
    auto it = max_curve.find(round);
    if (it == max_curve.end()) continue;
    rep.rounds.push_back(round);
    rep.vi_min_acc1.push_back(min_acc);
    rep.vi_max_acc1.push_back(it->second);
    const std::string leader = min_acc > it->second   ? "vi_min"
                               : min_acc < it->second ? "vi_max"
                                                      : "tie";
    rep.leader.push_back(leader);
    if (leader != "tie") leaders.push_back(leader);
  }
  if (leaders.empty()) {
    rep.status = "tie";
  } else if (leaders.front() == leaders.back()) {
    rep.status = leaders.front() + "_throughout";
  } else {
    rep.status = leaders.front() == "vi_min" ? "min_then_max" : "max_then_min";
  }
  return rep;
}

std::string crossover_csv(const CrossoverReport& report) {
  std::string out = "round,vi_min_acc1,vi_max_acc1,leader\n";
  for (std::size_t i = 0; i < report.rounds.size(); ++i) {
    out += std::to_string(report.rounds[i]) + "," + shortest(report.vi_min_acc1[i]) + "," +
           shortest(report.vi_max_acc1[i]) + "," + report.leader[i] + "\n";
  }
  out += "# status," + report.status + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

EmittedFiles emit_results(const std::vector<RoundAggregate>& aggregates,
                          const std::filesystem::path& dir) {
  if (aggregates.empty()) throw ContractViolation("nothing to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw EmbIoError(EmbIoErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  EmittedFiles files;
  files.results_csv = dir / "results.csv";
  files.results_svg = dir / "results.svg";
  write_text_file(files.results_csv, results_csv(aggregates));
  write_text_file(files.results_svg, results_svg(aggregates));
  if (auto rep = crossover(aggregates)) {
    files.crossover_csv = dir / "crossover.csv";
    write_text_file(*files.crossover_csv, crossover_csv(*rep));
  }
  return files;
}

EmittedFiles emit_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  auto files = emit_results(aggregate(result), dir);
  files.rounds_csv = dir / "rounds.csv";
  write_text_file(*files.rounds_csv, rounds_csv(result));
  return files;
}

}  // namespace visampler
