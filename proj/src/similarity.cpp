#include "conex/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace conex {

std::set<std::string> JobTraceProfile::syscalls() const {
  return {calls.begin(), calls.end()};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("trace line " + std::to_string(line_no) + ": " + what);
}

struct Call {
  std::string name;
  std::vector<std::string> args;
};

Call parse_call(std::string_view line, std::size_t line_no) {
  auto open = line.find('(');
  if (open == std::string_view::npos) fail(line_no, "expected 'name(args)'");
  Call call;
  call.name = std::string(trim(line.substr(0, open)));
  if (call.name.empty()) fail(line_no, "missing syscall name");
  for (char c : call.name) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == ')') {
      fail(line_no, "malformed syscall name '" + call.name + "'");
    }
  }

  std::size_t depth = 0;
  char quote = 0;
  std::string current;
  std::size_t i = open + 1;
  bool closed = false;
  for (; i < line.size(); ++i) {
    const char c = line[i];
    if (quote != 0) {
      current += c;
      if (c == '\\' && i + 1 < line.size()) {
        current += line[++i];
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      current += c;
    } else if (c == '[' || c == '{' || c == '(') {
      ++depth;
      current += c;
    } else if ((c == ']' || c == '}' || c == ')') && depth > 0) {
      --depth;
      current += c;
    } else if (c == ')') {
      closed = true;
      break;
    } else if (c == ',' && depth == 0) {
      call.args.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quote != 0) fail(line_no, "unterminated quoted argument");
  if (!closed) fail(line_no, "missing closing ')'");
  if (!call.args.empty() || !trim(current).empty()) call.args.push_back(std::move(current));

  std::string_view rest = trim(line.substr(i + 1));
  if (!rest.empty() && rest.front() != '=') {
    fail(line_no, "unexpected text after call: '" + std::string(rest) + "'");
  }
  for (auto& a : call.args) {
    a = std::string(trim(a));
    if (a.empty()) fail(line_no, "empty argument in call to " + call.name);
  }
  return call;
}

bool parse_numeral(const std::string& text, double& out) {
  const char first = text.front();
  const bool starts_numeric = std::isdigit(static_cast<unsigned char>(first)) ||
                              ((first == '-' || first == '+' || first == '.') &&
                               text.size() > 1);
  if (!starts_numeric) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

std::string unquote(const std::string& text, std::size_t line_no) {
  const char q = text.front();
  auto close = text.find(q, 1);
  while (close != std::string::npos && text[close - 1] == '\\') close = text.find(q, close + 1);
  if (close == std::string::npos) fail(line_no, "unterminated quoted argument");
  // strace marks truncated strings with a trailing "...".
  std::string_view tail = std::string_view(text).substr(close + 1);
  if (!tail.empty() && tail != "...") fail(line_no, "unexpected text after quoted argument");
  std::string out;
  for (std::size_t i = 1; i < close; ++i) {
    if (text[i] == '\\' && i + 1 < close) ++i;
    out += text[i];
  }
  return out;
}

double jaccard_multiset(const std::map<std::vector<std::string>, std::size_t>& a,
                        const std::map<std::vector<std::string>, std::size_t>& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      uni += ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      uni += ib->second;
      ++ib;
    } else {
      inter += std::min(ia->second, ib->second);
      uni += std::max(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::map<std::vector<std::string>, std::size_t> ngrams(const std::vector<std::string>& seq,
                                                       std::size_t k) {
  std::map<std::vector<std::string>, std::size_t> grams;
  if (seq.empty()) return grams;
  if (seq.size() < k) {
    ++grams[seq];
    return grams;
  }
  for (std::size_t i = 0; i + k <= seq.size(); ++i) {
    ++grams[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                     seq.begin() + static_cast<std::ptrdiff_t>(i + k))];
  }
  return grams;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

JobTraceProfile parse_trace_text(std::string_view text, std::string job_id) {
  JobTraceProfile p;
  p.job_id = std::move(job_id);
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> sums;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    Call call = parse_call(line, line_no);
    p.calls.push_back(call.name);
    for (std::size_t i = 0; i < call.args.size(); ++i) {
      const std::string& arg = call.args[i];
      double number = 0;
      if (arg.front() == '"' || arg.front() == '\'') {
        ++counts[call.name][unquote(arg, line_no)];
      } else if (arg == "true" || arg == "false" || arg == "True" || arg == "False") {
        continue;
      } else if (parse_numeral(arg, number)) {
        auto& s = sums[{call.name, static_cast<int>(i + 1)}];
        s.first += number;
        ++s.second;
      } else {
        ++counts[call.name][arg];
      }
    }
  }
  if (p.calls.empty()) throw ParseError("trace '" + p.job_id + "' contains no calls");

  for (const auto& [name, terms] : counts) {
    std::size_t total = 0;
    for (const auto& [term, n] : terms) total += n;
    for (const auto& [term, n] : terms) {
      p.terms[name].insert(term);
      p.term_freq[name][term] = static_cast<double>(n) / static_cast<double>(total);
    }
  }
  for (const auto& [key, s] : sums) {
    p.numeric_means[key] = s.first / static_cast<double>(s.second);
  }
  return p;
}

JobTraceProfile parse_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read trace " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace_text(buf.str(), path.stem().string());
}

SimilarityScore similarity(const JobTraceProfile& a, const JobTraceProfile& b,
                           const SimilarityOptions& options) {
  SimilarityScore s;
  const std::size_t k = std::max<std::size_t>(1, options.ngram);
  s.sequence = clamp01(jaccard_multiset(ngrams(a.calls, k), ngrams(b.calls, k)));

  const auto sa = a.syscalls();
  const auto sb = b.syscalls();
  std::set<std::string> all = sa;
  all.insert(sb.begin(), sb.end());

  static const std::set<std::string> kNoTerms;
  static const std::map<std::string, double> kNoFreq;
  double set_sum = 0;
  double freq_sum = 0;
  for (const auto& name : all) {
    if (!sa.count(name) || !sb.count(name)) continue;  // one-sided: scores 0
    auto ta = a.terms.find(name);
    auto tb = b.terms.find(name);
    const auto& xa = ta == a.terms.end() ? kNoTerms : ta->second;
    const auto& xb = tb == b.terms.end() ? kNoTerms : tb->second;
    std::set<std::string> uni = xa;
    uni.insert(xb.begin(), xb.end());
    if (uni.empty()) {
      set_sum += 1.0;
      freq_sum += 1.0;
      continue;
    }
    std::size_t inter = 0;
    for (const auto& t : xa) inter += xb.count(t);
    set_sum += static_cast<double>(inter) / static_cast<double>(uni.size());

    auto fa = a.term_freq.find(name);
    auto fb = b.term_freq.find(name);
    const auto& da = fa == a.term_freq.end() ? kNoFreq : fa->second;
    const auto& db = fb == b.term_freq.end() ? kNoFreq : fb->second;
    double diff = 0;
    for (const auto& t : uni) {
      auto ia = da.find(t);
      auto ib = db.find(t);
      diff += std::abs((ia == da.end() ? 0.0 : ia->second) - (ib == db.end() ? 0.0 : ib->second));
    }
    freq_sum += 1.0 - diff / static_cast<double>(uni.size());
  }
  const double n = static_cast<double>(all.size());
  s.term_sets = all.empty() ? 1.0 : clamp01(set_sum / n);
  s.term_freq = all.empty() ? 1.0 : clamp01(freq_sum / n);

  std::set<std::pair<std::string, int>> keys;
  for (const auto& [key, m] : a.numeric_means) keys.insert(key);
  for (const auto& [key, m] : b.numeric_means) keys.insert(key);
  if (keys.empty()) {
    s.numeric = 1.0;
  } else {
    double sum = 0;
    for (const auto& key : keys) {
      auto ia = a.numeric_means.find(key);
      auto ib = b.numeric_means.find(key);
      if (ia == a.numeric_means.end() || ib == b.numeric_means.end()) continue;
      const double m1 = ia->second;
      const double m2 = ib->second;
      const double denom = std::max(std::abs(m1), std::abs(m2));
      sum += denom == 0 ? 1.0 : clamp01(1.0 - std::abs(m1 - m2) / denom);
    }
    s.numeric = clamp01(sum / static_cast<double>(keys.size()));
  }

  s.overall = clamp01((s.sequence + s.term_sets + s.term_freq + s.numeric) / 4.0);
  return s;
}

std::vector<std::vector<std::size_t>> classify_similar(
    const std::vector<std::vector<double>>& scores, double threshold) {
  std::vector<std::vector<std::size_t>> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != scores.size()) {
      throw std::invalid_argument("classify_similar: score matrix is not square");
    }
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (i != j && scores[i][j] > threshold) out[i].push_back(j);
    }
  }
  return out;
}

SimilarityMatrix similarity_matrix(const std::vector<JobTraceProfile>& profiles,
                                   double threshold, const SimilarityOptions& options) {
  SimilarityMatrix m;
  m.threshold = threshold;
  const std::size_t n = profiles.size();
  m.scores.assign(n, std::vector<SimilarityScore>(n));
  std::vector<std::vector<double>> overall(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m.jobs.push_back(profiles[i].job_id);
    for (std::size_t j = i; j < n; ++j) {
      SimilarityScore s = similarity(profiles[i], profiles[j], options);
      m.scores[i][j] = s;
      m.scores[j][i] = s;
      overall[i][j] = overall[j][i] = s.overall;
    }
  }
  m.similar = classify_similar(overall, threshold);
  return m;
}

json SimilarityMatrix::to_json() const {
  json j;
  j["threshold"] = threshold;
  j["jobs"] = jobs;
  json matrix = json::array();
  json parts = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto& s = scores[i][k];
      row.push_back(s.overall);
      if (k > i) {
        parts.push_back({{"a", jobs[i]},
                         {"b", jobs[k]},
                         {"overall", s.overall},
                         {"sequence", s.sequence},
                         {"term_sets", s.term_sets},
                         {"term_freq", s.term_freq},
                         {"numeric", s.numeric}});
      }
    }
    matrix.push_back(std::move(row));
  }
  j["matrix"] = std::move(matrix);
  j["pairs"] = std::move(parts);
  json similar_sets = json::object();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    json names = json::array();
    for (std::size_t k : similar[i]) names.push_back(jobs[k]);
    similar_sets[jobs[i]] = std::move(names);
  }
  j["similar"] = std::move(similar_sets);
  return j;
}

}  // namespace conex
