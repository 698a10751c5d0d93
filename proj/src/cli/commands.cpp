#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eigenspine/annotation.hpp"
#include "eigenspine/cli.hpp"
#include "eigenspine/engine.hpp"
#include "eigenspine/lra.hpp"
#include "eigenspine/synth.hpp"

namespace eigenspine::cli {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

// Writes into a sibling temporary directory; commit() swaps it into place.
class OutputDir {
 public:
  explicit OutputDir(fs::path target) : target_(std::move(target)) {
    if (target_.filename().empty()) target_ = target_.parent_path();
    tmp_ = target_;
    tmp_ += ".tmp." + std::to_string(::getpid());
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(tmp_, ec);
  }
  const fs::path& path() const { return tmp_; }
  const fs::path& target() const { return target_; }

  void commit() {
    fs::path old = target_;
    old += ".old." + std::to_string(::getpid());
    const bool had = fs::exists(target_);
    if (had) fs::rename(target_, old);
    fs::rename(tmp_, target_);
    if (had) fs::remove_all(old);
    committed_ = true;
  }

 private:
  fs::path target_, tmp_;
  bool committed_ = false;
};

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

GrayImage load_gray(const fs::path& path) { return grayscale(read_png(path)); }

fs::path resolve_against(const fs::path& base_file, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = base_file.parent_path() / p;
  return fs::absolute(p).lexically_normal();
}

// Typed setters for a flat key=value configuration.
class Settings {
 public:
  void number(const std::string& key, double& target) {
    setters_[key] = [&target, key](const std::string& v) { target = to_double(key, v); };
  }
  void integer(const std::string& key, int& target) {
    setters_[key] = [&target, key](const std::string& v) {
      const double d = to_double(key, v);
      if (d != std::floor(d)) throw Error(ErrorCode::kParse, key + " must be an integer");
      target = static_cast<int>(d);
    };
  }
  void seed(const std::string& key, std::uint64_t& target) {
    setters_[key] = [&target, key](const std::string& v) {
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), target);
      if (ec != std::errc() || p != v.data() + v.size()) {
        throw Error(ErrorCode::kParse, key + ": not an unsigned integer '" + v + "'");
      }
    };
  }
  void boolean(const std::string& key, bool& target) {
    setters_[key] = [&target, key](const std::string& v) {
      if (v == "true" || v == "1") target = true;
      else if (v == "false" || v == "0") target = false;
      else throw Error(ErrorCode::kParse, key + ": expected true or false");
    };
  }
  void text(const std::string& key, std::string& target) {
    setters_[key] = [&target](const std::string& v) { target = v; };
  }
  template <class F>
  void custom(const std::string& key, F f) {
    setters_[key] = f;
  }

  /// Declares a command-line option for every key ("tau_c" -> "--tau-c").
  void add_options(CLI::App& app, const std::map<std::string, std::string>& help) {
    for (const auto& [key, setter] : setters_) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      auto it = help.find(key);
      app.add_option(flag, flags_[key], it == help.end() ? key : it->second);
    }
  }

  /// Config file first, then flags given on the command line.
  void apply(const std::map<std::string, std::string>& file, const CLI::App& app) {
    for (const auto& [key, value] : file) {
      auto it = setters_.find(key);
      if (it == setters_.end()) throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
      it->second(value);
    }
    for (const auto& [key, value] : flags_) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      const CLI::Option* opt = app.get_option_no_throw(flag);
      if (opt && opt->count() > 0) setters_.at(key)(value);
    }
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, key + ": not a number '" + v + "'");
    }
  }

  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::map<std::string, std::string> flags_;
};

void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  fs::path out;
  CorpusSpec corpus;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const SyntheticCorpus corpus = make_corpus(a.corpus);
  OutputDir dir(a.out);
  fs::create_directories(dir.path() / "seed");
  fs::create_directories(dir.path() / "pool");

  auto emit = [&](const std::vector<CorpusItem>& items, const std::string& sub) {
    std::vector<AnnotationRecord> records;
    for (const auto& item : items) {
      const std::string rel = sub + "/" + item.truth.sample_id + ".png";
      write_png(dir.path() / rel, render(item.truth, item.spec));
      AnnotationRecord r;
      r.sample = item.truth;
      r.image = rel;
      r.cobb = item.cobb;
      r.source = LabelSource::kSeed;
      records.push_back(std::move(r));
    }
    return records;
  };
  write_annotations(dir.path() / "seed.jsonl", emit(corpus.seed, "seed"));
  write_annotations(dir.path() / "pool.jsonl", emit(corpus.pool, "pool"));

  json memorized = json::object();
  for (const auto& item : corpus.pool) {
    if (item.copied_from) memorized[item.truth.sample_id] = *item.copied_from;
  }
  const json manifest = {{"seed", a.corpus.seed},
                         {"n_seed", a.corpus.n_seed},
                         {"n_pool", a.corpus.n_pool},
                         {"canvas", {a.corpus.base.canvas_width, a.corpus.base.canvas_height}},
                         {"n_vertebrae", a.corpus.base.n_vertebrae},
                         {"memorized", memorized}};
  write_text(dir.path() / "corpus.json", manifest.dump(2) + "\n");
  dir.commit();
  out << "wrote " << corpus.seed.size() << " seed and " << corpus.pool.size()
      << " pool samples (" << memorized.size() << " memorized copies) to "
      << dir.target().string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- fit-basis

int cmd_fit_basis(const fs::path& annotations, int m, const fs::path& out_path, std::ostream& out) {
  std::vector<ContourVector> contours;
  for (const auto& r : read_annotations(annotations)) {
    for (const auto& v : r.sample.instances) contours.push_back(v.contour);
  }
  const ContourMatrix a = build_contour_matrix(contours);
  const EigenSpineBasis basis = fit_basis(a, static_cast<std::size_t>(m));
  save_basis(basis, out_path);

  out << "contours " << a.cols() << ", dimension " << a.rows() << ", m " << basis.m() << '\n';
  out << "singular values:";
  char buf[64];
  for (Eigen::Index i = 0; i < basis.singular_values.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.6g", basis.singular_values[i]);
    out << buf;
  }
  out << "\n  m  frobenius_error  relative_error\n";
  const double norm = a.data.norm();
  for (std::size_t k = 1; k <= basis.m(); ++k) {
    EigenSpineBasis head{basis.basis.leftCols(k), basis.singular_values.head(k), basis.n_vertices};
    const double e = reconstruction_error(head, a);
    std::snprintf(buf, sizeof buf, "%3zu  %15.6f  %14.3e\n", k, e, norm > 0 ? e / norm : 0.0);
    out << buf;
  }
  out << "wrote " << out_path.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- cobb

CobbReport reference_report(const AnnotationRecord& r) {
  if (r.sample.instances.size() >= 2) return cobb_report(r.sample);
  if (r.cobb) return *r.cobb;
  throw Error(ErrorCode::kTooFewInstances,
              r.sample.sample_id + ": reference needs two instances or a cobb field");
}

int cmd_cobb(const fs::path& annotations, const std::optional<fs::path>& reference,
             const std::optional<fs::path>& out_path, std::ostream& out) {
  const auto records = read_annotations(annotations);
  std::vector<std::pair<std::string, CobbReport>> reports;
  for (const auto& r : records) {
    try {
      reports.emplace_back(r.sample.sample_id, cobb_report(r.sample));
    } catch (const Error& e) {
      throw Error(e.code(), r.sample.sample_id + ": " + e.detail());
    }
  }
  std::ostringstream lines;
  for (const auto& [id, rep] : reports) {
    lines << json{{"sample_id", id}, {"cobb", rep}}.dump() << '\n';
  }
  if (out_path) {
    write_file_atomic(*out_path, lines.str());
  } else {
    out << lines.str();
  }

  if (reference) {
    std::map<std::string, CobbReport> ref;
    for (const auto& r : read_annotations(*reference)) ref[r.sample.sample_id] = reference_report(r);
    std::vector<double> pmax, gmax;
    double ed = 0.0, abs_err = 0.0;
    for (const auto& [id, rep] : reports) {
      auto it = ref.find(id);
      if (it == ref.end()) throw Error(ErrorCode::kIdMismatch, "sample '" + id + "' missing from reference");
      pmax.push_back(rep.max_deg);
      gmax.push_back(it->second.max_deg);
      ed += angle_ed(rep, it->second);
      abs_err += std::abs(rep.max_deg - it->second.max_deg);
    }
    const double n = static_cast<double>(std::max<std::size_t>(reports.size(), 1));
    char buf[160];
    std::snprintf(buf, sizeof buf, "samples %zu  smape %.2f%%  ed %.2f  mean_abs_max_error %.2f\n",
                  reports.size(), reports.empty() ? 0.0 : smape(pmax, gmax), ed / n, abs_err / n);
    out << buf;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- privacy-scan

int cmd_privacy_scan(const fs::path& candidates, const fs::path& references,
                     const SimilarityConfig& cfg, const std::optional<fs::path>& out_path,
                     std::ostream& out, std::ostream& err) {
  cfg.validate();
  std::vector<ReferenceImage> refs;
  for (const auto& p : list_pngs(references)) refs.push_back({p.stem().string(), load_gray(p)});
  if (refs.empty()) {
    throw Error(ErrorCode::kEmptyReferenceSet, "no PNG images in " + references.string());
  }
  std::vector<PrivacyAudit> audits;
  for (const auto& p : list_pngs(candidates)) {
    audits.push_back(privacy_audit(p.stem().string(), load_gray(p), refs, cfg));
  }
  std::ostringstream csv;
  write_audit_csv(csv, audits, cfg.top_k);
  if (out_path) {
    write_file_atomic(*out_path, csv.str());
  } else {
    out << csv.str();
  }
  const auto rejected = std::count_if(audits.begin(), audits.end(),
                                      [](const PrivacyAudit& a) { return a.rejected; });
  char buf[160];
  std::snprintf(buf, sizeof buf, "rejected %ld of %zu candidates (tau_cs %.3f, references %zu)\n",
                static_cast<long>(rejected), audits.size(), cfg.tau_cs, refs.size());
  (out_path ? out : err) << buf;
  return kExitOk;
}

// ---------------------------------------------------------------- engine

struct EngineArgs {
  fs::path seed_set, pool, out;
  std::optional<fs::path> references, config;
  EngineConfig engine;
  std::string selection = "cumulative";
  std::string predictor = "noisy_oracle";
  std::uint64_t seed = 0;
  OracleSpec oracle;
  int basis_m = 16;
};

std::vector<ReferenceImage> load_references(const EngineArgs& a,
                                            const std::vector<AnnotationRecord>& seeds) {
  std::vector<ReferenceImage> refs;
  if (a.references) {
    for (const auto& p : list_pngs(*a.references)) refs.push_back({p.stem().string(), load_gray(p)});
  } else {
    for (const auto& r : seeds) {
      if (r.image.empty()) continue;
      refs.push_back({r.sample.sample_id, load_gray(resolve_against(a.seed_set, r.image))});
    }
  }
  return refs;
}

int cmd_engine(EngineArgs a, std::ostream& out) {
  a.engine.selection_mode = selection_mode_from_string(a.selection);
  a.engine.validate();
  const auto seed_records = read_annotations(a.seed_set);
  const auto pool_records = read_annotations(a.pool);

  std::vector<SpineSample> seeds;
  for (const auto& r : seed_records) seeds.push_back(r.sample);
  std::vector<PoolItem> pool;
  for (const auto& r : pool_records) {
    if (r.image.empty()) throw Error(ErrorCode::kParse, r.sample.sample_id + ": pool entry has no image");
    const fs::path image = resolve_against(a.pool, r.image);
    const ImageSize size = read_png_size(image);
    PoolItem item;
    item.sample_id = r.sample.sample_id;
    item.image = image.string();
    item.size = size;
    item.load_image = [image] { return load_gray(image); };
    if (!r.sample.instances.empty()) item.truth = r.sample;
    pool.push_back(std::move(item));
  }
  auto refs = load_references(a, seed_records);

  std::shared_ptr<Predictor> predictor;
  if (a.predictor == "noisy_oracle") {
    predictor = std::make_shared<NoisyOracle>(a.oracle, seeds.size(), a.seed);
  } else if (a.predictor == "nearest_coeff") {
    predictor = std::make_shared<NearestCoeff>(a.basis_m);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "predictor must be noisy_oracle or nearest_coeff, got '" + a.predictor + "'");
  }

  OutputDir dir(a.out);
  DataEngine engine(a.engine, seeds, std::move(pool), std::move(refs));
  engine.review_queue() = ReviewQueue::load(dir.target() / "review_queue.json", a.engine.min_area_px2);
  engine.attach(predictor);

  std::ostringstream log, ledger, metrics;
  metrics << metrics_csv_header() << '\n';
  log << timestamp() << " start selection=" << to_string(a.engine.selection_mode)
      << " tau_c=" << a.engine.tau_c << " pool=" << pool_records.size() << '\n';
  write_annotations(dir.path() / "snapshot_000.jsonl", {});

  auto flush = [&] {
    write_text(dir.path() / "ledger.jsonl", ledger.str());
    write_text(dir.path() / "metrics.csv", metrics.str());
    std::ostringstream audit;
    const auto audits = engine.privacy_audits();
    write_audit_csv(audit, audits, a.engine.similarity.top_k);
    write_text(dir.path() / "privacy_audit.csv", audit.str());
    engine.review_queue().save(dir.path() / "review_queue.json");
    write_text(dir.path() / "run.log", log.str());
    dir.commit();
  };

  while (!engine.converged() && engine.iteration() < a.engine.max_iterations) {
    IterationResult it;
    try {
      it = engine.run_iteration();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBlockedOnReview) throw;
      log << timestamp() << " blocked at iteration " << engine.iteration() + 1 << ": "
          << e.detail() << '\n';
      flush();
      throw;
    }
    for (const auto& entry : it.ledger.entries) {
      ledger << SelectionLedger::to_json_line(it.iteration, entry) << '\n';
    }
    metrics << to_csv_row(it.metrics) << '\n';
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03d.jsonl", it.iteration);
    write_annotations(dir.path() / name, it.snapshot);
    log << timestamp() << " iteration " << it.iteration << " " << to_csv_row(it.metrics) << '\n';
    out << "iteration " << it.iteration << ": accepted " << it.metrics.accepted << ", rejected "
        << it.metrics.rejected << ", pending review " << it.metrics.pending_review << '\n';
  }
  const bool converged = engine.converged();
  log << timestamp() << (converged ? " converged" : " stopped at max_iterations") << " after "
      << engine.iteration() << " iteration(s)\n";
  flush();
  out << (converged ? "converged" : "stopped at max_iterations") << " after " << engine.iteration()
      << " iteration(s); outputs in " << dir.target().string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- serve

int cmd_serve(const fs::path& state, const std::string& host, int port, double min_area,
              std::ostream& out, std::ostream& err) {
  ReviewServer server(state, min_area);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    print_error(err, "PortInUse", "cannot bind " + host + ":" + std::to_string(port));
    return kExitPortInUse;
  }
  out << "serving review queue of " << state.string() << " on http://" << host << ":" << bound
      << " (" << server.queue().pending_count() << " pending)" << std::endl;
  server.listen();
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return kExitRankDeficient;
    case ErrorCode::kBlockedOnReview: return kExitBlockedOnReview;
    case ErrorCode::kNoPredictor:
    case ErrorCode::kMissingStats: return kExitFailure;
    default: return kExitUsage;
  }
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  for (int n = 1; std::getline(in, line); ++n) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "config line " + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw Error(ErrorCode::kParse, "config line " + std::to_string(n) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw Error(ErrorCode::kParse, "config line " + std::to_string(n) + ": duplicate key " + key);
    }
  }
  return out;
}

std::map<std::string, std::string> load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  return parse_config(in);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eigen-spine contour toolkit and iterative labeling engine", "eigenspine"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // synth
  SynthArgs synth;
  synth.corpus.base.snap_to_pixel = true;
  auto* s = app.add_subcommand("synth", "generate a synthetic seed set and unlabeled pool");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--n-seed", synth.corpus.n_seed, "labeled seed samples")->check(CLI::NonNegativeNumber);
  s->add_option("--n-pool", synth.corpus.n_pool, "unlabeled pool samples")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", synth.corpus.seed, "random seed");
  s->add_option("--memorized-fraction", synth.corpus.memorized_fraction,
                "fraction of pool images copied from the seed set")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--width", synth.corpus.base.canvas_width, "canvas width")->check(CLI::PositiveNumber);
  s->add_option("--height", synth.corpus.base.canvas_height, "canvas height")->check(CLI::PositiveNumber);
  s->add_option("--vertebrae", synth.corpus.base.n_vertebrae, "vertebrae per spine")->check(CLI::Range(2, 64));

  // fit-basis
  fs::path fb_in, fb_out = "basis.json";
  int fb_m = 16;
  auto* fb = app.add_subcommand("fit-basis", "fit the eigen-spine basis of an annotation file");
  fb->add_option("--annotations", fb_in, "annotation JSONL")->required();
  fb->add_option("--m", fb_m, "basis rank")->check(CLI::PositiveNumber);
  fb->add_option("--out", fb_out, "basis JSON output");

  // cobb
  fs::path cb_in;
  std::optional<fs::path> cb_ref, cb_out;
  auto* cb = app.add_subcommand("cobb", "measure Cobb angles of annotated samples");
  cb->add_option("--annotations", cb_in, "annotation JSONL")->required();
  cb->add_option("--reference", cb_ref, "reference annotations for SMAPE and ED");
  cb->add_option("--out", cb_out, "per-sample report JSONL (default stdout)");

  // privacy-scan
  fs::path ps_cand, ps_ref;
  std::optional<fs::path> ps_out;
  SimilarityConfig ps_cfg;
  auto* ps = app.add_subcommand("privacy-scan", "audit candidate images against references");
  ps->add_option("--candidates", ps_cand, "directory of candidate PNGs")->required();
  ps->add_option("--references", ps_ref, "directory of reference PNGs")->required();
  ps->add_option("--out", ps_out, "audit CSV (default stdout)");
  ps->add_option("--lambda-ss", ps_cfg.lambda_ss, "SSIM weight");
  ps->add_option("--lambda-ps", ps_cfg.lambda_ps, "pixel-similarity weight");
  ps->add_option("--tau-cs", ps_cfg.tau_cs, "rejection threshold");
  ps->add_option("--window", ps_cfg.window, "SSIM window, 0 for whole image");
  ps->add_option("--top-k", ps_cfg.top_k, "matches kept per candidate");

  // engine
  EngineArgs ea;
  Settings settings;
  settings.number("tau_c", ea.engine.tau_c);
  settings.number("min_area_px2", ea.engine.min_area_px2);
  settings.integer("min_instances", ea.engine.min_instances);
  settings.number("center_dist_factor", ea.engine.center_dist_factor);
  settings.text("selection_mode", ea.selection);
  settings.number("lambda_ss", ea.engine.similarity.lambda_ss);
  settings.number("lambda_ps", ea.engine.similarity.lambda_ps);
  settings.number("tau_cs", ea.engine.similarity.tau_cs);
  settings.integer("ssim_window", ea.engine.similarity.window);
  settings.integer("top_k", ea.engine.similarity.top_k);
  settings.integer("max_iterations", ea.engine.max_iterations);
  settings.boolean("strict_review", ea.engine.strict_review);
  settings.text("predictor", ea.predictor);
  settings.integer("basis_m", ea.basis_m);
  settings.seed("seed", ea.seed);
  settings.number("oracle_noise_px", ea.oracle.base.coord_noise_px);
  settings.number("oracle_noise_spread", ea.oracle.base.noise_spread);
  settings.number("oracle_drop_rate", ea.oracle.base.drop_rate);
  settings.number("oracle_spurious_rate", ea.oracle.base.spurious_rate);
  settings.number("oracle_difficulty_sigma", ea.oracle.difficulty_sigma);
  settings.number("oracle_skill_decay", ea.oracle.skill_decay);
  auto* en = app.add_subcommand("engine", "run the iterative labeling engine");
  en->add_option("--seed-set", ea.seed_set, "labeled seed annotations")->required();
  en->add_option("--pool", ea.pool, "unlabeled pool annotations (instances are ground truth)")
      ->required();
  en->add_option("--references", ea.references, "directory of reference PNGs (default: seed images)");
  en->add_option("--out", ea.out, "output directory")->required();
  en->add_option("--config", ea.config, "key = value configuration file");
  en->add_option("--selection", ea.selection, "no_filter, independent or cumulative");
  en->add_flag("--strict", ea.engine.strict_review, "block while review items are pending");
  settings.add_options(*en, {{"seed", "random seed"},
                             {"tau_c", "confidence threshold"},
                             {"max_iterations", "iteration limit"},
                             {"predictor", "noisy_oracle or nearest_coeff"}});
  // --selection and --strict are spelled out above; drop the generated twins.
  en->remove_option(en->get_option("--selection-mode"));
  en->remove_option(en->get_option("--strict-review"));

  // serve
  fs::path sv_state;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8765;
  double sv_area = 200.0;
  auto* sv = app.add_subcommand("serve", "serve the review queue of an engine output directory");
  sv->add_option("--state", sv_state, "engine output directory")->required();
  sv->add_option("--host", sv_host, "bind address");
  sv->add_option("--port", sv_port, "TCP port")->check(CLI::Range(0, 65535));
  sv->add_option("--min-area", sv_area, "minimum contour area for corrections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    print_error(err, "Usage", e.what());
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (fb->parsed()) return cmd_fit_basis(fb_in, fb_m, fb_out, out);
    if (cb->parsed()) return cmd_cobb(cb_in, cb_ref, cb_out, out);
    if (ps->parsed()) return cmd_privacy_scan(ps_cand, ps_ref, ps_cfg, ps_out, out, err);
    if (en->parsed()) {
      const std::string selection_flag = ea.selection;
      const bool strict_flag = ea.engine.strict_review;
      settings.apply(ea.config ? load_config(*ea.config) : std::map<std::string, std::string>{},
                     *en);
      if (en->count("--selection") > 0) ea.selection = selection_flag;
      if (en->count("--strict") > 0) ea.engine.strict_review = strict_flag;
      return cmd_engine(ea, out);
    }
    if (sv->parsed()) return cmd_serve(sv_state, sv_host, sv_port, sv_area, out, err);
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.detail());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    print_error(err, "Io", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error(err, "Internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace eigenspine::cli
