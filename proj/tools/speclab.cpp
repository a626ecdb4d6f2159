// speclab command-line front end.
//
//   speclab <command> --input doc.json --out dir [knobs]
//
// Exit status: 0 pass, 2 checked and failed, 1 operational error. Every
// report embeds the input document and the effective knobs. Knobs can also
// come from a "config" object in the input, so a report file is itself a
// valid --input; flags given on the command line win.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "speclab/io.hpp"

namespace fs = std::filesystem;
using speclab::io::Json;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kFail = 2;

struct RunConfig {
  std::string command;
  std::string input;
  std::string out;
  std::size_t depth = 0;  // 0: automatic
  double target_error = 1e-10;
  std::optional<double> tol;
  std::size_t grid = 32;
  std::optional<std::size_t> window;
  int mmax = 6;
  std::size_t samples = 200;
  std::size_t word_length = 20;
  std::uint64_t seed = 7;
  unsigned threads = 0;
  std::optional<std::size_t> nmax;
  double eps_complete = 0.01;
  double eps_orth = 1e-4;
  double sigma_floor = 0.5;
  double pass_fraction = 0.95;
  std::int64_t max_index = 16;
  double slack = 0.01;

  speclab::TruncationPolicy policy() const {
    return depth ? speclab::TruncationPolicy::fixed(depth) : speclab::TruncationPolicy::automatic(target_error);
  }
  speclab::SpectrumThresholds thresholds() const { return {eps_complete, eps_orth}; }
  // --tol is the off-lattice mass tolerance for tiling, so triples there are
  // verified at the library default.
  double hadamard_tol() const { return command == "tiling" ? speclab::kDefaultHadamardTol : *tol; }
};

// Per-command defaults for the knobs whose natural value differs.
void apply_defaults(RunConfig& c) {
  const auto& cmd = c.command;
  if (!c.tol) c.tol = cmd == "tiling" ? 1e-7 : speclab::kDefaultHadamardTol;
  if (!c.window) c.window = (cmd == "random" || cmd == "tiling") ? 64 : cmd == "probe" ? 200 : 8;
  if (!c.nmax) c.nmax = cmd == "strichartz" ? 6 : cmd == "spectrum" ? 3 : 0;
  c.threads = speclab::resolve_threads(c.threads);
}

Json config_json(const RunConfig& c) {
  return {{"command", c.command},
          {"depth", c.depth},
          {"target_error", c.target_error},
          {"tol", *c.tol},
          {"grid", c.grid},
          {"window", *c.window},
          {"mmax", c.mmax},
          {"samples", c.samples},
          {"word_length", c.word_length},
          {"seed", c.seed},
          {"threads", c.threads},
          {"nmax", *c.nmax},
          {"eps_complete", c.eps_complete},
          {"eps_orth", c.eps_orth},
          {"sigma_floor", c.sigma_floor},
          {"pass_fraction", c.pass_fraction},
          {"max_index", c.max_index},
          {"slack", c.slack}};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Output {
 public:
  explicit Output(const RunConfig& c) : dir_(c.out), command_(c.command) { fs::create_directories(dir_); }

  void csv(const std::string& text) const { write(command_ + ".csv", text); }
  void json(const Json& j) const { write(command_ + ".json", j.dump(2) + "\n"); }

 private:
  void write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir_ / name);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << text;
  }
  fs::path dir_;
  std::string command_;
};

std::string q_sweep_csv(const speclab::SpectrumReport& r) {
  std::ostringstream s;
  const std::size_t d = r.points.empty() ? 0 : r.points.front().xi.size();
  for (std::size_t i = 0; i < d; ++i) s << "xi" << i + 1 << ",";
  s << "q,terms,tail_bound\n";
  for (const auto& p : r.points) {
    for (double x : p.xi) s << fmt(x) << ",";
    s << fmt(p.value.q) << "," << p.value.terms << "," << fmt(p.value.tail_bound) << "\n";
  }
  return s.str();
}

Json spectrum_report_json(const speclab::SpectrumReport& r) {
  return {{"min_q", r.min_q},
          {"max_q", r.max_q},
          {"argmin", r.argmin},
          {"window", r.window},
          {"points", r.points.size()},
          {"eps_complete", r.thresholds.eps_complete},
          {"eps_orth", r.thresholds.eps_orth},
          {"pass", r.pass}};
}

// The document's "spectrum", else the level sets of the measure itself.
speclab::SpectrumGenerator document_spectrum(const Json& doc, const speclab::ConvolutionSystem& sys) {
  if (doc.contains("spectrum")) return speclab::io::spectrum_from_json(doc.at("spectrum"), &sys);
  return speclab::SpectrumGenerator::level_sets(sys);
}

//---------------------------------------------------------------------------//
// Commands. Each fills result and returns the exit status.
//---------------------------------------------------------------------------//

int cmd_verify(const RunConfig& c, const Json& doc, Json& result) {
  std::vector<speclab::HadamardTriple> ts;
  if (doc.contains("triple")) ts.push_back(speclab::io::triple_from_json(doc.at("triple"), *c.tol));
  else if (doc.contains("family")) ts = speclab::io::family_from_json(doc.at("family"), *c.tol);
  else ts = speclab::io::document_system(doc, *c.tol).triples();
  bool pass = true;
  Json rows = Json::array();
  for (const auto& t : ts) {
    auto row = speclab::io::to_json(t);
    row["status"] = speclab::to_string(t.status());
    row["residual"] = t.residual();
    rows.push_back(row);
    pass = pass && t.is_verified();
  }
  result["triples"] = rows;
  result["pass"] = pass;
  return pass ? kPass : kFail;
}

int cmd_cycles(const RunConfig& c, const Json& doc, Json& result) {
  std::vector<speclab::HadamardTriple> ts;
  if (doc.contains("triple")) ts.push_back(speclab::io::triple_from_json(doc.at("triple"), *c.tol));
  else if (doc.contains("family")) ts = speclab::io::family_from_json(doc.at("family"), *c.tol);
  else ts = speclab::io::document_system(doc, *c.tol).triples();
  const auto rep = ts.size() == 1 ? speclab::find_extreme_cycles(ts.front(), c.mmax)
                                  : speclab::common_extreme_cycles(ts, c.mmax);
  result = speclab::io::to_json(rep);
  if (*c.nmax > 0 && !rep.cycles.empty()) {
    Json levels = Json::array();
    try {
      for (std::size_t n = 1; n <= *c.nmax; ++n)
        levels.push_back({{"n", n}, {"elements", speclab::dynamically_simple_spectrum(ts.front(), rep.cycles, n)}});
      result["spectrum_levels"] = levels;
    } catch (const speclab::NonIntegerElement& e) {
      result["spectrum_error"] = e.what();
    }
  }
  return kPass;
}

int cmd_spectrum(const RunConfig& c, const Json& doc, Json& result) {
  const auto sys = speclab::io::document_system(doc, *c.tol);
  const auto gen = document_spectrum(doc, sys);
  std::ostringstream csv;
  csv << "level";
  for (std::size_t i = 0; i < gen.dim(); ++i) csv << ",x" << i + 1;
  csv << "\n";
  Json sizes = Json::array();
  bool nested = true;
  std::vector<speclab::IntVector> prev;
  for (std::size_t n = 1; n <= *c.nmax; ++n) {
    const auto lv = gen.level(n);
    sizes.push_back(lv.size());
    nested = nested && std::includes(lv.begin(), lv.end(), prev.begin(), prev.end());
    for (const auto& v : lv) {
      csv << n;
      for (auto x : v) csv << "," << x;
      csv << "\n";
    }
    prev = lv;
  }
  Output(c).csv(csv.str());
  result = {{"kind", speclab::to_string(gen.kind())}, {"level_sizes", sizes}, {"nested", nested}};
  if (gen.kind() == speclab::SpectrumGenerator::Kind::LevelSets) {
    bool collisions = false;
    for (std::size_t n = 1; n <= *c.nmax; ++n) collisions = collisions || speclab::lambda_n(sys, n).collisions;
    result["collisions"] = collisions;
  }
  return kPass;
}

int cmd_check(const RunConfig& c, const Json& doc, Json& result) {
  const auto sys = speclab::io::document_system(doc, *c.tol);
  const auto gen = document_spectrum(doc, sys);
  const auto rep = speclab::check_spectrum(sys, gen, speclab::GridSpec::uniform(sys.dim(), c.grid), *c.window,
                                           c.thresholds(), c.policy(), c.threads);
  Output(c).csv(q_sweep_csv(rep));
  result = spectrum_report_json(rep);
  result["spectrum_kind"] = speclab::to_string(gen.kind());
  return rep.pass ? kPass : kFail;
}

int cmd_strichartz(const RunConfig& c, const Json& doc, Json& result) {
  const auto sys = speclab::io::document_system(doc, *c.tol);
  const auto rep = speclab::strichartz_report(sys, *c.nmax, c.policy(), speclab::kDefaultSizeCap, c.threads);
  std::ostringstream csv;
  csv << "n,sigma_min,min_tail_modulus,collisions\n";
  bool collisions = false;
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    csv << r.n << "," << fmt(r.sigma_min) << "," << fmt(r.min_tail_modulus) << "," << r.collisions << "\n";
    rows.push_back({{"n", r.n}, {"sigma_min", r.sigma_min}, {"min_tail_modulus", r.min_tail_modulus},
                    {"collisions", r.collisions}});
    collisions = collisions || r.collisions;
  }
  Output(c).csv(csv.str());
  const bool pass = !collisions && rep.floor >= c.sigma_floor;
  result = {{"rows", rows}, {"floor", rep.floor}, {"verdict", rep.verdict}, {"pass", pass}};
  return pass ? kPass : kFail;
}

int cmd_quasiproduct(const RunConfig& c, const Json& doc, Json& result) {
  speclab::QuasiProductSpec spec;
  if (doc.contains("quasi_product")) {
    spec = speclab::io::quasi_product_from_json(doc.at("quasi_product"));
  } else {
    const auto p = speclab::io::required(doc, "padding");
    std::vector<speclab::DigitSet> fam;
    for (const auto& b : speclab::io::required(p, "B_family")) fam.emplace_back(1, speclab::io::vectors_from_json(b));
    std::optional<std::int64_t> pad;
    if (p.contains("p")) pad = speclab::io::integer_from_json(p.at("p"));
    spec = speclab::build_1d_padding(speclab::io::integer_from_json(speclab::io::required(p, "R")), fam,
                                     speclab::FrequencySet(1, speclab::io::vectors_from_json(speclab::io::required(p, "L"))),
                                     pad);
  }
  result["spec"] = speclab::io::to_json(spec);
  bool pass = true;
  try {
    const auto t = speclab::build_quasi_product(spec, *c.tol);
    result["triple"] = speclab::io::to_json(t);
    result["residual"] = t.residual();
  } catch (const speclab::VerificationFailed& e) {
    result["verification_error"] = e.what();
    result["pass"] = false;
    return kFail;
  }
  if (doc.contains("lambda1") && doc.contains("lambda2")) {
    const auto l1 = speclab::io::spectrum_from_json(doc.at("lambda1"));
    const auto l2 = speclab::io::spectrum_from_json(doc.at("lambda2"));
    std::optional<double> fiber;
    if (doc.value("fiber_check", false)) {
      speclab::EnsembleConfig ec;
      ec.family.clear();
      for (const auto& b : spec.b_family) ec.family.push_back(speclab::make_triple(spec.r, b, spec.l, *c.tol));
      ec.word_length = c.word_length;
      ec.samples = c.samples;
      ec.seed = c.seed;
      ec.lambda = l2;
      ec.grid = speclab::GridSpec::uniform(spec.inner_dim(), c.grid);
      ec.window = *c.window;
      ec.thresholds = c.thresholds();
      ec.policy = c.policy();
      ec.threads = c.threads;
      fiber = speclab::ensemble_spectrum_report(ec).pass_fraction;
    }
    const auto rep = speclab::product_spectrum_check(spec, l1, l2,
                                                     speclab::GridSpec::uniform(spec.outer_dim() + spec.inner_dim(), c.grid),
                                                     *c.window, c.thresholds(), c.policy(), fiber, c.threads);
    Output(c).csv(q_sweep_csv(rep.report));
    result["product_check"] = spectrum_report_json(rep.report);
    if (rep.fiber_pass_fraction) {
      result["fiber_pass_fraction"] = *rep.fiber_pass_fraction;
      result["agreement_threshold"] = rep.agreement_threshold;
      result["agrees"] = *rep.agrees;
    }
    pass = rep.report.pass;
  }
  result["pass"] = pass;
  return pass ? kPass : kFail;
}

speclab::EnsembleConfig ensemble_config(const RunConfig& c, const Json& doc) {
  speclab::EnsembleConfig ec;
  ec.family = speclab::io::family_from_json(speclab::io::required(doc, "family"), c.hadamard_tol());
  const std::size_t d = ec.family.front().dim();
  ec.word_length = c.word_length;
  ec.samples = c.samples;
  ec.seed = c.seed;
  if (doc.contains("tail")) ec.tail = speclab::io::tail_from_json(doc.at("tail"));
  ec.lambda = doc.contains("spectrum") ? speclab::io::spectrum_from_json(doc.at("spectrum"))
                                       : speclab::SpectrumGenerator::lattice(speclab::IntMatrix::identity(d));
  ec.grid = speclab::GridSpec::uniform(d, c.grid);
  ec.window = *c.window;
  ec.thresholds = c.thresholds();
  ec.policy = c.policy();
  ec.threads = c.threads;
  return ec;
}

int cmd_random(const RunConfig& c, const Json& doc, Json& result) {
  const auto rep = speclab::ensemble_spectrum_report(ensemble_config(c, doc));
  std::ostringstream csv;
  csv << "word,minQ,maxQ,verdict\n";
  for (const auto& s : rep.samples)
    csv << speclab::word_string(s.word) << "," << fmt(s.min_q) << "," << fmt(s.max_q) << ","
        << (s.error.empty() ? (s.pass ? "pass" : "fail") : "error") << "\n";
  Output(c).csv(csv.str());
  Json failing = Json::array();
  for (const auto& w : rep.failing) failing.push_back(speclab::word_string(w));
  Json errors = Json::array();
  for (const auto& s : rep.samples)
    if (!s.error.empty()) errors.push_back({{"word", speclab::word_string(s.word)}, {"error", s.error}});
  const bool pass = rep.pass_fraction >= c.pass_fraction;
  result = {{"pass_fraction", rep.pass_fraction},
            {"min_q", {{"min", rep.min}, {"p5", rep.p5}, {"median", rep.median}}},
            {"failing", failing},
            {"errors", errors},
            {"caveat", "pass fraction at finite truncation and window; not a probability-one statement"},
            {"pass", pass}};
  return pass ? kPass : kFail;
}

int cmd_tiling(const RunConfig& c, const Json& doc, Json& result) {
  const bool ensemble = doc.contains("family") && !doc.contains("word");
  if (ensemble) {
    const auto lattice = doc.contains("lattice") ? speclab::io::matrix_from_json(doc.at("lattice"))
                                                 : speclab::IntMatrix::identity(speclab::io::family_from_json(doc.at("family")).front().dim());
    const auto rep = speclab::ensemble_tiling_report(ensemble_config(c, doc), lattice, *c.tol);
    std::ostringstream csv;
    csv << "word,max_offlattice_mass,verdict\n";
    for (const auto& s : rep.samples)
      csv << speclab::word_string(s.word) << "," << fmt(s.max_offlattice_mass) << ","
          << (s.error.empty() ? (s.pass ? "pass" : "fail") : "error") << "\n";
    Output(c).csv(csv.str());
    const bool pass = rep.pass_fraction >= c.pass_fraction;
    result = {{"lattice", speclab::io::to_json(lattice)}, {"pass_fraction", rep.pass_fraction},
              {"worst_mass", rep.worst_mass}, {"pass", pass}};
    return pass ? kPass : kFail;
  }
  const auto sys = speclab::io::document_system(doc, c.hadamard_tol());
  if (doc.contains("lattice")) {
    const auto lattice = speclab::io::matrix_from_json(doc.at("lattice"));
    const auto r = speclab::lattice_tiling_check(sys, lattice, *c.window, *c.tol, c.policy(), c.threads);
    result = {{"lattice", speclab::io::to_json(lattice)}, {"max_offlattice_mass", r.max_offlattice_mass},
              {"witness", r.witness},   {"max_tail_bound", r.max_tail_bound},
              {"checked", r.checked},   {"note", r.note},
              {"pass", r.pass}};
    return r.pass ? kPass : kFail;
  }
  const auto found = speclab::find_tiling_lattice(sys, *c.window, c.max_index, *c.tol, c.policy(), c.threads);
  result["pass"] = found.has_value();
  if (found) result["lattice"] = speclab::io::to_json(*found);
  return found ? kPass : kFail;
}

int cmd_probe(const RunConfig& c, const Json& doc, Json& result) {
  const auto family = speclab::io::family_from_json(speclab::io::required(doc, "family"), *c.tol);
  const auto word = speclab::io::word_from_json(speclab::io::required(doc, "word"));
  const auto tail = doc.contains("tail") ? speclab::io::tail_from_json(doc.at("tail")) : speclab::TailRule::RepeatLast;
  const std::size_t d = family.front().dim();
  const auto lambda = doc.contains("spectrum") ? speclab::io::spectrum_from_json(doc.at("spectrum"))
                                               : speclab::SpectrumGenerator::lattice(speclab::IntMatrix::identity(d));
  std::vector<speclab::RealVector> probes;
  for (const auto& p : speclab::io::required(doc, "probes")) probes.push_back(speclab::io::real_vector_from_json(p));
  const auto rep = speclab::counterexample_probe(family, word, tail, lambda, probes, *c.window, c.slack, c.policy());
  Json pts = Json::array();
  for (const auto& p : rep.points)
    pts.push_back({{"xi", p.xi}, {"q", p.value.q}, {"terms", p.value.terms}, {"tail_bound", p.value.tail_bound}});
  result = {{"points", pts}, {"slack", rep.slack}, {"verdict", speclab::to_string(rep.verdict)},
            {"pass", rep.verdict == speclab::ProbeVerdict::Consistent}};
  return rep.verdict == speclab::ProbeVerdict::Consistent ? kPass : kFail;
}

const std::map<std::string, std::pair<const char*, int (*)(const RunConfig&, const Json&, Json&)>> kCommands = {
    {"verify", {"verify Hadamard triples", cmd_verify}},
    {"cycles", {"enumerate extreme cycles", cmd_cycles}},
    {"spectrum", {"list candidate spectrum levels", cmd_spectrum}},
    {"check", {"Q sweep against a candidate spectrum", cmd_check}},
    {"strichartz", {"singular values of F_n", cmd_strichartz}},
    {"quasiproduct", {"assemble and check a quasi-product triple", cmd_quasiproduct}},
    {"random", {"random-word ensemble spectrality", cmd_random}},
    {"tiling", {"Fourier-side lattice tiling check", cmd_tiling}},
    {"probe", {"Q at chosen points for one word", cmd_probe}},
};

// Loads a knob from a previous report unless it was given on the command line.
template <class T>
void inherit(const Json& cfg, const char* key, CLI::Option* opt, T& field) {
  if (opt->count() == 0 && cfg.contains(key)) field = cfg.at(key).get<T>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral measures from Hadamard triples: verification, cycles, spectra and Monte Carlo checks"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  RunConfig c;
  std::size_t window = 0, nmax = 0;
  double tol = 0.0;

  app.add_option("--input", c.input, "input JSON document or previous report")->required()->check(CLI::ExistingFile);
  app.add_option("--out", c.out, "output directory")->required();
  auto* o_depth = app.add_option("--depth", c.depth, "fixed number of FT factors (0: automatic)");
  auto* o_target = app.add_option("--target-error", c.target_error, "FT tail bound target in automatic mode");
  auto* o_tol = app.add_option("--tol", tol, "Hadamard residual tolerance (tiling: off-lattice mass)")->check(CLI::PositiveNumber);
  auto* o_grid = app.add_option("--grid", c.grid, "grid points per axis")->check(CLI::PositiveNumber);
  auto* o_window = app.add_option("--window", window, "spectrum level / frequency window");
  auto* o_mmax = app.add_option("--mmax", c.mmax, "largest cycle period")->check(CLI::PositiveNumber);
  auto* o_samples = app.add_option("--samples", c.samples, "ensemble size")->check(CLI::PositiveNumber);
  auto* o_wlen = app.add_option("--word-length", c.word_length, "random word length")->check(CLI::PositiveNumber);
  auto* o_seed = app.add_option("--seed", c.seed, "ensemble seed");
  auto* o_threads = app.add_option("--threads", c.threads, "worker cap (default: SPECLAB_THREADS, else 1)");
  auto* o_nmax = app.add_option("--nmax", nmax, "largest level n");
  auto* o_epsc = app.add_option("--eps-complete", c.eps_complete, "pass when min Q >= 1 - eps");
  auto* o_epso = app.add_option("--eps-orth", c.eps_orth, "pass when max Q <= 1 + eps");
  auto* o_floor = app.add_option("--sigma-floor", c.sigma_floor, "strichartz: pass when min sigma_min >= floor");
  auto* o_frac = app.add_option("--pass-fraction", c.pass_fraction, "ensembles: pass when this fraction passes");
  auto* o_index = app.add_option("--max-index", c.max_index, "tiling: largest sublattice index searched");
  auto* o_slack = app.add_option("--slack", c.slack, "probe: window slack");
  for (const auto& [name, entry] : kCommands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }
  c.command = app.get_subcommands().front()->get_name();

  Json doc, result;
  int status = kError;
  try {
    std::ifstream in(c.input);
    doc = Json::parse(in);
    if (doc.contains("config")) {
      const Json cfg = doc.at("config");
      inherit(cfg, "depth", o_depth, c.depth);
      inherit(cfg, "target_error", o_target, c.target_error);
      inherit(cfg, "grid", o_grid, c.grid);
      inherit(cfg, "mmax", o_mmax, c.mmax);
      inherit(cfg, "samples", o_samples, c.samples);
      inherit(cfg, "word_length", o_wlen, c.word_length);
      inherit(cfg, "seed", o_seed, c.seed);
      inherit(cfg, "threads", o_threads, c.threads);
      inherit(cfg, "eps_complete", o_epsc, c.eps_complete);
      inherit(cfg, "eps_orth", o_epso, c.eps_orth);
      inherit(cfg, "sigma_floor", o_floor, c.sigma_floor);
      inherit(cfg, "pass_fraction", o_frac, c.pass_fraction);
      inherit(cfg, "max_index", o_index, c.max_index);
      inherit(cfg, "slack", o_slack, c.slack);
      inherit(cfg, "tol", o_tol, tol);
      inherit(cfg, "window", o_window, window);
      inherit(cfg, "nmax", o_nmax, nmax);
      if (cfg.contains("tol")) c.tol = tol;
      if (cfg.contains("window")) c.window = window;
      if (cfg.contains("nmax")) c.nmax = nmax;
    }
    if (doc.contains("input")) doc = Json(doc.at("input"));
    else doc.erase("config");
    if (o_tol->count()) c.tol = tol;
    if (o_window->count()) c.window = window;
    if (o_nmax->count()) c.nmax = nmax;
    apply_defaults(c);
    if (*c.window == 0) throw speclab::InvalidArgument("--window must be >= 1");

    status = kCommands.at(c.command).second(c, doc, result);
    Json report{{"command", c.command}, {"config", config_json(c)}, {"input", doc}, {"result", result},
                {"verdict", status == kPass ? "pass" : "fail"}};
    Output(c).json(report);
    std::cout << c.command << ": " << (status == kPass ? "pass" : "fail") << " (" << (fs::path(c.out) / (c.command + ".json")).string()
              << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "speclab " << c.command << ": " << e.what() << "\n";
    return kError;
  }
  return status;
}
