#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conex/value.hpp"

namespace conex {

/// Four-part summary of a system-call trace.
///
///   calls         A: syscall names in trace order
///   terms         B: syscall -> set of string/categorical argument terms
///   term_freq     C: syscall -> relative frequency of each term in B
///   numeric_means D: (syscall, 1-based argument position) -> mean value
struct JobTraceProfile {
  std::string job_id;
  std::vector<std::string> calls;
  std::map<std::string, std::set<std::string>> terms;
  std::map<std::string, std::map<std::string, double>> term_freq;
  std::map<std::pair<std::string, int>, double> numeric_means;

  /// Distinct syscall names.
  std::set<std::string> syscalls() const;
};

/// Parses one call per line, `name(arg, ...)` with an optional ` = ret`
/// suffix. Quoted arguments are string terms, numerals are numeric, the
/// literals true/false (any case of the first letter) are ignored, and any
/// other bare word or bracketed group is one categorical term. Blank lines
/// and lines starting with '#' are skipped. Throws ParseError with the line
/// number on malformed input, or when the trace holds no calls.
JobTraceProfile parse_trace_text(std::string_view text, std::string job_id);
/// job_id defaults to the file stem.
JobTraceProfile parse_trace(const std::filesystem::path& path);

struct SimilarityScore {
  double overall = 0;
  double sequence = 0;
  double term_sets = 0;
  double term_freq = 0;
  double numeric = 0;
};

struct SimilarityOptions {
  /// k of the call-sequence k-grams.
  std::size_t ngram = 3;
};

/// Sequence: Jaccard over k-gram multisets of A (a sequence shorter than k
/// is one gram). Term sets: mean Jaccard of B over the union of syscalls.
/// Term frequencies: per syscall 1 - mean |tf1 - tf2| over the union of
/// terms, averaged over the union of syscalls. Numeric: mean over the
/// union of D keys of 1 - |m1 - m2| / max(|m1|, |m2|), 1 when neither
/// profile has numeric arguments. Anything present on one side only
/// scores 0. Overall is the plain mean of the four parts.
SimilarityScore similarity(const JobTraceProfile& a, const JobTraceProfile& b,
                           const SimilarityOptions& options = {});

constexpr double kDefaultSimilarityThreshold = 0.77;

/// For each job, the other jobs whose score is strictly above threshold.
std::vector<std::vector<std::size_t>> classify_similar(
    const std::vector<std::vector<double>>& scores,
    double threshold = kDefaultSimilarityThreshold);

struct SimilarityMatrix {
  std::vector<std::string> jobs;
  std::vector<std::vector<SimilarityScore>> scores;
  std::vector<std::vector<std::size_t>> similar;
  double threshold = kDefaultSimilarityThreshold;

  json to_json() const;
};

SimilarityMatrix similarity_matrix(const std::vector<JobTraceProfile>& profiles,
                                   double threshold = kDefaultSimilarityThreshold,
                                   const SimilarityOptions& options = {});

}  // namespace conex
