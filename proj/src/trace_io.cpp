#include "irrlyap/trace_io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "irrlyap/errors.hpp"

namespace irrlyap {

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << kTraceHeader << '\n' << std::setprecision(17);
  for (const auto& r : trace.records)
    out << r.k << ',' << r.p << ',' << r.f << ',' << r.gradnorm << ','
        << r.relres << ',' << r.inner_iters << ',' << r.nh << ',' << r.alpha
        << ',' << r.ms << '\n';
}

void write_trace_csv(const std::string& path, const SolveTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_trace_csv(out, trace);
}

SolveTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ParseError(path, lineno, "unexpected trace header");
  SolveTrace trace;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9)
      throw ParseError(path, lineno, "expected 9 fields, found " +
                                         std::to_string(fields.size()));
    try {
      trace.records.push_back(TraceRecord{
          std::stol(fields[0]), std::stol(fields[1]), std::stod(fields[2]),
          std::stod(fields[3]), std::stod(fields[4]), std::stol(fields[5]),
          std::stol(fields[6]), std::stod(fields[7]), std::stod(fields[8])});
    } catch (const std::logic_error&) {
      throw ParseError(path, lineno, "malformed number");
    }
  }
  return trace;
}

RunSummary summarize(const IrrResult& result) {
  return RunSummary{result.final_rank(), result.rel_res, result.trace.total_nh(),
                    result.trace.total_ms(), result.ranks_visited()};
}

std::string summary_to_json(const RunSummary& summary) {
  nlohmann::json j;
  j["final_rank"] = summary.final_rank;
  j["rel_res"] = summary.rel_res;
  j["total_nH"] = summary.total_nh;
  j["total_ms"] = summary.total_ms;
  j["ranks_visited"] = summary.ranks_visited;
  return j.dump(2);
}

void write_summary_json(const std::string& path, const RunSummary& summary) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << summary_to_json(summary) << '\n';
}

RunSummary read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    RunSummary s;
    s.final_rank = j.at("final_rank").get<Index>();
    s.rel_res = j.at("rel_res").get<double>();
    s.total_nh = j.at("total_nH").get<Index>();
    s.total_ms = j.at("total_ms").get<double>();
    s.ranks_visited = j.at("ranks_visited").get<std::vector<Index>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
}

}  // namespace irrlyap
