#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "irrlyap/irr.hpp"
#include "irrlyap/tnewton.hpp"

namespace irrlyap {

/// Header of the trace CSV.
inline constexpr const char* kTraceHeader =
    "k,p,f,gradnorm,relres,inner_iters,nH,alpha,ms";

void write_trace_csv(std::ostream& out, const SolveTrace& trace);
void write_trace_csv(const std::string& path, const SolveTrace& trace);
/// Throws ParseError on a malformed file.
SolveTrace read_trace_csv(const std::string& path);

struct RunSummary {
  Index final_rank = 0;
  double rel_res = 0.0;
  Index total_nh = 0;
  double total_ms = 0.0;
  std::vector<Index> ranks_visited;
};

RunSummary summarize(const IrrResult& result);

std::string summary_to_json(const RunSummary& summary);
void write_summary_json(const std::string& path, const RunSummary& summary);
/// Throws ParseError on a malformed file.
RunSummary read_summary_json(const std::string& path);

}  // namespace irrlyap
