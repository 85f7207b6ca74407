#include "conex/journal.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

namespace conex {

json JournalHeader::to_json() const {
  return json{{"type", "header"},         {"version", version},
              {"sampler", sampler},       {"space_hash", space_hash},
              {"rules_hash", rules_hash}, {"settings_hash", settings_hash},
              {"seed", seed}};
}

JournalHeader JournalHeader::from_json(const json& j) {
  if (!j.is_object() || j.value("type", "") != "header") {
    throw JournalError("journal does not start with a header line");
  }
  JournalHeader h;
  h.version = j.value("version", 0);
  h.sampler = j.value("sampler", "");
  h.space_hash = j.value("space_hash", "");
  h.rules_hash = j.value("rules_hash", "");
  h.settings_hash = j.value("settings_hash", "");
  h.seed = j.value("seed", std::uint64_t{0});
  return h;
}

json record_to_json(const EvaluationRecord& r) {
  json j;
  j["type"] = "eval";
  j["gen"] = r.generation;
  j["member"] = r.member;
  j["role"] = r.role;
  j["status"] = status_name(r.status);
  j["config"] = configuration_to_json(r.config);
  j["perf"] = r.performance ? json(*r.performance) : json(nullptr);
  j["repeats"] = r.repeats;
  j["wall"] = r.wall_clock;
  j["ts"] = r.timestamp;
  j["diag"] = r.diagnostics;
  return j;
}

EvaluationRecord record_from_json(const json& j, const ConfigurationSpace& space) {
  if (j.value("type", "") != "eval") throw JournalError("not an evaluation entry");
  EvaluationRecord r;
  try {
    r.generation = j.at("gen").get<int>();
    r.member = j.at("member").get<int>();
    r.role = j.at("role").get<std::string>();
    r.status = status_from_name(j.at("status").get<std::string>());
    r.config = configuration_from_json(j.at("config"), space);
    if (!j.at("perf").is_null()) r.performance = j.at("perf").get<double>();
    r.repeats = j.at("repeats").get<std::vector<double>>();
    r.wall_clock = j.value("wall", 0.0);
    r.timestamp = j.value("ts", std::int64_t{0});
    r.diagnostics = j.value("diag", "");
  } catch (const json::exception& e) {
    throw JournalError(std::string("malformed evaluation entry: ") + e.what());
  }
  return r;
}

void ResumeState::prime(EvaluationCache& cache) const {
  for (const auto& r : records) cache.store(r.config.key(), r);
}

// --- journal ------------------------------------------------------------

Journal::Journal(std::filesystem::path path, std::FILE* file, bool durable)
    : path_(std::move(path)), file_(file), durable_(durable) {}

Journal::Journal(Journal&& other) noexcept
    : path_(std::move(other.path_)),
      file_(other.file_),
      durable_(other.durable_),
      replay_(std::move(other.replay_)),
      replay_pos_(other.replay_pos_),
      appended_(other.appended_) {
  other.file_ = nullptr;
}

Journal& Journal::operator=(Journal&& other) noexcept {
  if (this != &other) {
    if (file_ != nullptr) std::fclose(file_);
    path_ = std::move(other.path_);
    file_ = other.file_;
    durable_ = other.durable_;
    replay_ = std::move(other.replay_);
    replay_pos_ = other.replay_pos_;
    appended_ = other.appended_;
    other.file_ = nullptr;
  }
  return *this;
}

Journal::~Journal() {
  if (file_ != nullptr) std::fclose(file_);
}

Journal Journal::create(const std::filesystem::path& path, const JournalHeader& header,
                        bool durable) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw JournalError("cannot create journal " + path.string());
  Journal j(path, f, durable);
  j.write_line(header.to_json().dump());
  return j;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JournalError("cannot read journal " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct SplitLines {
  std::vector<std::string> lines;
  std::size_t good_bytes = 0;
  bool torn = false;
};

/// Splits into complete, parseable lines. A trailing fragment (no newline or
/// unparseable last line) is reported as torn.
SplitLines split_journal(const std::string& text) {
  SplitLines out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.torn = true;
      break;
    }
    std::string line = text.substr(pos, nl - pos);
    bool last = nl + 1 >= text.size();
    if (!json::accept(line)) {
      if (last) {
        out.torn = true;
        break;
      }
      throw JournalError("corrupt journal line " + std::to_string(out.lines.size() + 1));
    }
    out.lines.push_back(std::move(line));
    pos = nl + 1;
    out.good_bytes = pos;
  }
  return out;
}

}  // namespace

std::vector<json> Journal::read_entries(const std::filesystem::path& path) {
  auto split = split_journal(slurp(path));
  std::vector<json> out;
  for (const auto& line : split.lines) out.push_back(json::parse(line));
  return out;
}

Journal Journal::resume(const std::filesystem::path& path, const JournalHeader& header,
                        const ConfigurationSpace& space, ResumeState* state, bool durable) {
  if (!std::filesystem::exists(path)) throw JournalError("no journal at " + path.string());
  const std::string text = slurp(path);
  SplitLines split = split_journal(text);
  if (split.lines.empty()) throw JournalError("journal " + path.string() + " has no header");

  JournalHeader found = JournalHeader::from_json(json::parse(split.lines.front()));
  if (!(found == header)) {
    std::string what;
    if (found.sampler != header.sampler) what += " sampler";
    if (found.space_hash != header.space_hash) what += " space";
    if (found.rules_hash != header.rules_hash) what += " rules";
    if (found.settings_hash != header.settings_hash) what += " settings";
    if (found.seed != header.seed) what += " seed";
    if (found.version != header.version) what += " version";
    throw ResumeRefused("journal " + path.string() + " was written with different inputs:" + what);
  }

  ResumeState local;
  ResumeState& st = state != nullptr ? *state : local;
  st = ResumeState{};
  if (split.torn) {
    st.warnings.push_back("journal " + path.string() + ": truncated torn trailing entry at byte " +
                          std::to_string(split.good_bytes));
    std::filesystem::resize_file(path, split.good_bytes);
  }
  for (std::size_t i = 1; i < split.lines.size(); ++i) {
    json entry = json::parse(split.lines[i]);
    const std::string type = entry.value("type", "");
    if (type == "eval") {
      st.records.push_back(record_from_json(entry, space));
    } else if (type == "generation") {
      st.last_generation = entry;
    } else if (type == "complete") {
      st.complete = true;
    }
  }

  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (f == nullptr) throw JournalError("cannot append to journal " + path.string());
  Journal j(path, f, durable);
  j.replay_.assign(split.lines.begin() + 1, split.lines.end());
  return j;
}

void Journal::append(const json& entry) {
  std::string line = entry.dump();
  if (replay_pos_ < replay_.size()) {
    if (replay_[replay_pos_] != line) {
      throw JournalError("resumed run diverged from journal " + path_.string() + " at entry " +
                         std::to_string(replay_pos_ + 2));
    }
    ++replay_pos_;
    return;
  }
  write_line(line);
  ++appended_;
}

void Journal::write_line(const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fputc('\n', file_) == EOF || std::fflush(file_) != 0) {
    throw JournalError("I/O error writing journal " + path_.string());
  }
  if (durable_ && ::fsync(::fileno(file_)) != 0) {
    throw JournalError("I/O error syncing journal " + path_.string());
  }
}

}  // namespace conex
