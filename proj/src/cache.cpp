#include "priorclean/cache.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "priorclean/error.hpp"
#include "priorclean/sampling.hpp"

namespace priorclean {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'T', 'B'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void raw(const void* p, size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void strs(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}
  void raw(void* p, size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) throw IoError("truncated table file " + path_);
  }
  uint64_t u64() {
    uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    std::string s(u64(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::vector<std::string> strs() {
    std::vector<std::string> v(u64());
    for (auto& s : v) s = str();
    return v;
  }

 private:
  std::istream& is_;
  std::string path_;
};

size_t table_bytes(const Table& t) {
  return t.n_rows() * (t.n_cols() * (sizeof(double) + 1) + sizeof(int32_t)) + 256;
}

}  // namespace

void write_table_binary(const Table& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  Writer w(os);
  w.raw(kMagic, 4);
  w.raw(&kVersion, sizeof kVersion);
  w.u64(t.n_rows());
  w.u64(t.n_cols());
  for (const Column& c : t.columns()) {
    w.str(c.name);
    const uint8_t kind = static_cast<uint8_t>(c.kind);
    w.raw(&kind, 1);
    w.strs(c.categories);
    w.raw(c.values.data(), c.values.size() * sizeof(double));
    w.raw(c.missing.data(), c.missing.size());
  }
  const uint8_t has_label = t.has_label();
  w.raw(&has_label, 1);
  if (has_label) {
    const Label& l = t.label();
    w.str(l.name);
    w.strs(l.classes);
    w.raw(l.codes.data(), l.codes.size() * sizeof(int32_t));
  }
  const Provenance& p = t.provenance();
  w.str(p.source);
  w.str(p.artifact ? p.artifact->stem() : std::string());
  w.strs(p.transforms);
  w.strs(p.warnings);
  if (!os) throw IoError("failed writing " + path.string());
}

Table read_table_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  Reader r(is, path.string());
  char magic[4];
  uint32_t version;
  r.raw(magic, 4);
  r.raw(&version, sizeof version);
  if (std::memcmp(magic, kMagic, 4) != 0 || version != kVersion) {
    throw IoError(path.string() + " is not a priorclean table file");
  }
  const size_t rows = r.u64();
  const size_t cols = r.u64();
  std::vector<Column> columns(cols);
  for (Column& c : columns) {
    c.name = r.str();
    uint8_t kind;
    r.raw(&kind, 1);
    c.kind = static_cast<ColumnKind>(kind);
    c.categories = r.strs();
    c.values.resize(rows);
    c.missing.resize(rows);
    r.raw(c.values.data(), rows * sizeof(double));
    r.raw(c.missing.data(), rows);
  }
  uint8_t has_label;
  r.raw(&has_label, 1);
  std::optional<Label> label;
  if (has_label) {
    label.emplace();
    label->name = r.str();
    label->classes = r.strs();
    label->codes.resize(rows);
    r.raw(label->codes.data(), rows * sizeof(int32_t));
  }
  Provenance p;
  p.source = r.str();
  p.artifact = ArtifactName::parse(r.str());
  p.transforms = r.strs();
  p.warnings = r.strs();
  return Table(std::move(columns), std::move(label), std::move(p));
}

CleaningCache::CleaningCache(ApplyOptions options, size_t memory_budget_bytes,
                             std::filesystem::path spill_dir)
    : options_(options), budget_(memory_budget_bytes), spill_dir_(std::move(spill_dir)) {
  if (budget_ > 0 && spill_dir_.empty()) {
    spill_dir_ = std::filesystem::temp_directory_path() /
                 ("priorclean-spill-" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    own_spill_dir_ = true;
  }
  if (budget_ > 0) std::filesystem::create_directories(spill_dir_);
}

CleaningCache::~CleaningCache() {
  std::error_code ec;
  if (own_spill_dir_) {
    std::filesystem::remove_all(spill_dir_, ec);
  } else {
    for (auto& [key, slot] : slots_) {
      if (!slot->spill_path.empty()) std::filesystem::remove(slot->spill_path, ec);
    }
  }
}

size_t CleaningCache::spilled() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return spill_count_;
}

void CleaningCache::account(const std::shared_ptr<Slot>& slot, const Table& t) {
  if (budget_ == 0) return;
  std::lock_guard<std::mutex> lock(mutex_);
  resident_order_.push_back(slot);
  resident_bytes_ += table_bytes(t);
  size_t i = 0;
  while (resident_bytes_ > budget_ && i + 1 < resident_order_.size()) {
    auto victim = resident_order_[i++];
    std::unique_lock<std::mutex> vlock(victim->mutex, std::try_to_lock);
    if (!vlock.owns_lock() || !victim->resident) continue;
    const auto path = spill_dir_ / ("t" + std::to_string(spill_count_++) + ".bin");
    write_table_binary(victim->resident->table, path);
    resident_bytes_ -= table_bytes(victim->resident->table);
    victim->spill_path = path;
    victim->resident.reset();
  }
  resident_order_.erase(
      std::remove_if(resident_order_.begin(), resident_order_.end(),
                     [](const std::shared_ptr<Slot>& s) { return !s->spill_path.empty(); }),
      resident_order_.end());
}

std::shared_ptr<const CleanedTable> CleaningCache::get(const Table& dirty, const Pipeline& pipeline) {
  return get(dirty, table_fingerprint(dirty), pipeline);
}

std::shared_ptr<const CleanedTable> CleaningCache::get(const Table& dirty, const Digest& dirty_fp,
                                                       const Pipeline& pipeline) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& s = slots_[{dirty_fp, pipeline.canonical()}];
    if (!s) s = std::make_shared<Slot>();
    slot = s;
  }
  std::shared_ptr<const CleanedTable> fresh;
  {
    std::lock_guard<std::mutex> lock(slot->mutex);
    if (slot->done) {
      if (slot->error) std::rethrow_exception(slot->error);
      if (slot->resident) return slot->resident;
      auto loaded = std::make_shared<CleanedTable>();
      loaded->table = read_table_binary(slot->spill_path);
      loaded->fingerprint = slot->fingerprint;
      loaded->guard_triggered = slot->guard_triggered;
      return loaded;
    }
    try {
      auto out = std::make_shared<CleanedTable>();
      if (pipeline.is_noop()) {
        out->table = dirty;
      } else {
        Pipeline prefix{{pipeline.steps.begin(), pipeline.steps.end() - 1}};
        auto base = get(dirty, dirty_fp, prefix);
        ActionOutcome o = run_action(base->table, pipeline.steps.back(), options_);
        out->table = std::move(o.table);
        out->guard_triggered = base->guard_triggered || o.guard_triggered;
      }
      out->fingerprint = table_fingerprint(out->table);
      slot->fingerprint = out->fingerprint;
      slot->guard_triggered = out->guard_triggered;
      slot->resident = out;
      fresh = out;
      ++executions_;
    } catch (...) {
      slot->error = std::current_exception();
    }
    slot->done = true;
    if (slot->error) std::rethrow_exception(slot->error);
  }
  account(slot, fresh->table);
  return fresh;
}

std::string protocol_name(EvalProtocol p) {
  return p == EvalProtocol::kReward ? "reward" : "baseline";
}

EvaluationHub::EvaluationHub(Evaluator& evaluator, HubOptions options)
    : evaluator_(evaluator), options_(options) {}

double EvaluationHub::rf_accuracy(const Table& t) { return rf_accuracy(t, table_fingerprint(t)); }

double EvaluationHub::rf_accuracy(const Table& t, const Digest& fp) {
  return *rf_cache_.get(fp, [&] { return cv_accuracy(t, options_.cv_folds, options_.forest); });
}

std::shared_ptr<const EvaluationResult> EvaluationHub::evaluate(const Table& t,
                                                                EvalProtocol protocol) {
  return evaluate(t, table_fingerprint(t), protocol);
}

std::shared_ptr<const EvaluationResult> EvaluationHub::evaluate(const Table& t, const Digest& fp,
                                                                EvalProtocol protocol) {
  return eval_cache_.get({static_cast<int>(protocol), fp}, [&] {
    const Table& base = t;
    Table sub;
    const Table* source = &base;
    if (protocol == EvalProtocol::kReward) {
      sub = subsample_stratified(base, options_.reward_max_rows, options_.seed);
      source = &sub;
    }
    SplitPair split = stratified_split(*source, options_.test_fraction, options_.seed);
    return evaluator_.evaluate(split.train, split.test);
  });
}

}  // namespace priorclean
