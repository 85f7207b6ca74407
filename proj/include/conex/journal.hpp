#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conex/executor.hpp"
#include "conex/space.hpp"

namespace conex {

/// Identity of a tuning run. Resume is refused unless every field matches.
struct JournalHeader {
  int version = 1;
  std::string sampler;
  std::string space_hash;
  std::string rules_hash;
  std::string settings_hash;
  std::uint64_t seed = 0;

  json to_json() const;
  static JournalHeader from_json(const json& j);
  friend bool operator==(const JournalHeader&, const JournalHeader&) = default;
};

class ResumeRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JournalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json record_to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const json& j, const ConfigurationSpace& space);

/// What a journal already holds when a run is resumed.
struct ResumeState {
  std::vector<EvaluationRecord> records;
  std::optional<json> last_generation;
  bool complete = false;
  std::vector<std::string> warnings;

  /// Seeds the executor cache so replayed evaluations never re-run.
  void prime(EvaluationCache& cache) const;
};

/// Append-only, line-delimited JSON log of a tuning run.
///
/// Line 1 is the header; every following line is one entry with a "type"
/// of "eval", "generation" or "complete". Each line is flushed (and
/// fsync'ed when durable) before append() returns.
///
/// A journal opened for resume keeps its existing entries as a replay
/// prefix: while the sampler re-emits entries identical to that prefix they
/// are skipped, so a resumed run continues the file instead of duplicating
/// it. A differing entry means the run diverged and raises JournalError.
class Journal {
 public:
  /// Creates (truncating) a journal and writes the header.
  static Journal create(const std::filesystem::path& path, const JournalHeader& header,
                        bool durable = true);

  /// Opens an existing journal for continuation. A torn trailing line is
  /// truncated with a warning. Throws ResumeRefused on header mismatch and
  /// JournalError if the file is unreadable.
  static Journal resume(const std::filesystem::path& path, const JournalHeader& header,
                        const ConfigurationSpace& space, ResumeState* state,
                        bool durable = true);

  /// Reads every entry without opening for write.
  static std::vector<json> read_entries(const std::filesystem::path& path);

  Journal(Journal&& other) noexcept;
  Journal& operator=(Journal&& other) noexcept;
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;
  ~Journal();

  void append(const json& entry);
  void append(const EvaluationRecord& record) { append(record_to_json(record)); }

  const std::filesystem::path& path() const { return path_; }
  /// Entries still waiting to be matched by replay.
  std::size_t pending_replay() const { return replay_.size() - replay_pos_; }
  std::size_t appended() const { return appended_; }

 private:
  Journal(std::filesystem::path path, std::FILE* file, bool durable);
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  bool durable_ = true;
  std::vector<std::string> replay_;
  std::size_t replay_pos_ = 0;
  std::size_t appended_ = 0;
};

}  // namespace conex
