#include "comrope/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "comrope/attention.hpp"
#include "comrope/bench.hpp"
#include "comrope/io.hpp"
#include "comrope/ropefamily.hpp"
#include "comrope/toytask.hpp"
#include "comrope/verify.hpp"

namespace comrope::cli {

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string variant = "ld";
  ModelDims dims;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  double tol = 0.0;
  CLI::Option* tol_opt = nullptr;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* sub, RunConfig& cfg, bool with_variant = true) {
  // --h is the head count, so help is long-form only
  sub->set_help_flag("--help", "print this help and exit");
  if (with_variant) sub->add_option("--variant", cfg.variant, "vanilla, liere, ap or ld")->capture_default_str();
  sub->add_option("--d", cfg.dims.d, "embedding dimension")->capture_default_str();
  sub->add_option("--h", cfg.dims.heads, "attention heads")->capture_default_str();
  sub->add_option("--b", cfg.dims.block, "block size")->capture_default_str();
  sub->add_option("--axes", cfg.dims.axes, "coordinate axes N")->capture_default_str();
  sub->add_option("--layers", cfg.dims.layers, "layer count")->capture_default_str();
  cfg.seed_opt = sub->add_option("--seed", cfg.seed, "random seed (COMROPE_SEED when omitted)");
  cfg.tol_opt = sub->add_option("--tol", cfg.tol, "tolerance override");
  sub->add_option("--out", cfg.out, "output file (stdout when omitted)");
  sub->add_option("--format", cfg.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

Variant require_variant(const std::string& name) {
  const auto v = parse_variant(name);
  if (!v) throw UsageError("unknown variant '" + name + "' (expected vanilla, liere, ap or ld)");
  return *v;
}

void require_dims(const ModelDims& dims, Variant v) {
  try {
    dims.validate(v);
  } catch (const DimensionError& e) {
    throw UsageError(std::string("invalid dimensions for ") + std::string(to_string(v)) + ": " + e.what());
  }
}

std::uint64_t resolve_seed(const RunConfig& cfg, std::ostream& err) {
  if (cfg.seed_opt && cfg.seed_opt->count() > 0) return cfg.seed;
  if (const char* env = std::getenv("COMROPE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto seed = std::stoull(env, &used);
      if (used == std::string(env).size()) return seed;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("COMROPE_SEED is not an unsigned integer: ") + env);
  }
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << seed << '\n';
  return seed;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError(std::string(flag) + ": empty list entry");
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item, &used));
      } else {
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": list must not be empty");
  return out;
}

void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
  if (cfg.out.empty()) {
    out << content;
  } else {
    io::write_atomic(cfg.out, content);
  }
}

std::vector<Coordinate> uniform_coords(std::size_t n, std::size_t axes, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Coordinate> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Coordinate c(axes);
    for (std::size_t a = 0; a < axes; ++a) c[a] = uniform(rng);
    out.push_back(std::move(c));
  }
  return out;
}

json dims_json(const ModelDims& d) {
  return {{"d", d.d}, {"h", d.heads}, {"b", d.block}, {"N", d.axes}, {"L", d.layers}};
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  RunConfig cfg;
  std::size_t trials = 100;
  std::size_t tokens = 16;
  std::size_t draws = 5;
};

int cmd_verify(VerifyArgs& args, std::ostream& out, std::ostream& err) {
  const Variant variant = require_variant(args.cfg.variant);
  require_dims(args.cfg.dims, variant);
  const auto& dims = args.cfg.dims;
  const std::uint64_t seed = resolve_seed(args.cfg, err);
  const auto tol = [&](double fallback) { return args.cfg.tol_opt->count() ? args.cfg.tol : fallback; };

  const auto set = build_set(variant, dims, seed);
  const bool commuting_expected = variant != Variant::LieRE || dims.block == 2 || dims.axes == 1;

  std::vector<verify::VerificationReport> reports;
  reports.push_back(verify::check_rope_equation(set, args.trials, tol(1e-8), seed));
  reports.push_back(verify::check_exp_sum_identity(set, args.trials, tol(1e-9), seed));
  reports.push_back(verify::check_orthogonality(set, args.trials, tol(1e-10), seed));
  {
    Rng rng(seed);
    const auto batch = attention::random_batch(args.tokens, dims, rng);
    const auto coords = uniform_coords(args.tokens, dims.axes, rng);
    const std::vector<double> rhos{1.0, 10.0, 100.0};
    const auto table = verify::check_offset_invariance(set, batch, coords, rhos, args.draws, seed);
    reports.push_back(verify::offset_invariance_report(table, args.draws, tol(1e-6), seed));
  }

  bool ok = true;
  json doc{{"variant", std::string(to_string(variant))},
           {"dims", dims_json(dims)},
           {"seed", seed},
           {"commuting_expected", commuting_expected},
           {"reports", json::array()}};
  for (const auto& r : reports) {
    const bool expect_pass = commuting_expected || r.suite == "orthogonality";
    if (expect_pass && !r.passed) ok = false;
    auto j = io::report_to_json(r);
    j["expected"] = expect_pass ? "pass" : "fail";
    doc["reports"].push_back(std::move(j));
    err << r.suite << ": " << (r.passed ? "pass" : "FAIL") << (r.passed == expect_pass ? "" : " (unexpected)")
        << (!r.passed && !expect_pass ? " (expected)" : "") << " max_residual=" << io::format_double(r.max_residual)
        << " tol=" << io::format_double(r.tolerance) << '\n';
  }
  doc["ok"] = ok;

  if (args.cfg.format == "json") {
    emit(args.cfg, doc.dump(2) + "\n", out);
  } else {
    std::ostringstream os;
    io::write_reports_csv(os, reports);
    emit(args.cfg, os.str(), out);
  }
  return ok ? kExitOk : kExitSuiteFailure;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  RunConfig cfg;
  std::string sweep_b;
  std::size_t tokens = 64;
  std::size_t repeats = bench::kMinRepeats;
  bool params_only = false;
  bool parallel = false;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* sweep_opt = nullptr;
};

int cmd_bench(BenchArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<std::size_t> sweep = args.sweep_opt->count() == 0
                                       ? std::vector<std::size_t>{args.cfg.dims.block}
                                       : parse_list<std::size_t>(args.sweep_b, "--sweep-b");
  std::vector<Variant> variants;
  if (args.variant_opt->count() > 0) {
    variants.push_back(require_variant(args.cfg.variant));
  } else {
    variants = {Variant::LieRE, Variant::ComRoPE_AP, Variant::ComRoPE_LD};
  }
  for (std::size_t b : sweep) {
    for (Variant v : variants) {
      ModelDims d = args.cfg.dims;
      d.block = b;
      require_dims(d, v);
    }
  }
  const std::uint64_t seed = args.params_only ? 0 : resolve_seed(args.cfg, err);

  json rows = json::array();
  std::ostringstream csv;
  csv << "variant,d,h,b,N,n,repeats,median_ns,per_token_ns,L,extra_params\n";
  for (std::size_t b : sweep) {
    for (Variant v : variants) {
      ModelDims d = args.cfg.dims;
      d.block = b;
      const auto count = bench::count_extra_params(v, d);
      json row{{"variant", std::string(to_string(v))}, {"d", d.d},           {"h", d.heads},
               {"b", d.block},                          {"N", d.axes},        {"L", d.layers},
               {"extra_params", count.extra_params}};
      csv << to_string(v) << ',' << d.d << ',' << d.heads << ',' << d.block << ',' << d.axes << ',';
      if (args.params_only) {
        csv << ",,,";
      } else {
        bench::TimingOptions opts;
        opts.repeats = args.repeats;
        opts.parallel = args.parallel;
        opts.seed = seed;
        const auto rec = bench::time_rotation(v, d, args.tokens, opts);
        csv << rec.n << ',' << rec.repeats << ',' << io::format_double(rec.median_ns) << ','
            << io::format_double(rec.per_token_ns);
        row["n"] = rec.n;
        row["repeats"] = rec.repeats;
        row["median_ns"] = rec.median_ns;
        row["per_token_ns"] = rec.per_token_ns;
        row["parallel"] = rec.parallel;
      }
      csv << ',' << d.layers << ',' << count.extra_params << '\n';
      rows.push_back(std::move(row));
    }
  }
  emit(args.cfg, args.cfg.format == "json" ? rows.dump(2) + "\n" : csv.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  RunConfig cfg;
  std::string variants = "ld,liere";
  std::string rhos = "0,1,10,100";
  std::size_t draws = 5;
  std::size_t tokens = 16;
};

int cmd_ablate_offset(AblateArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<Variant> variants;
  {
    std::stringstream ss(args.variants);
    std::string item;
    while (std::getline(ss, item, ',')) variants.push_back(require_variant(item));
    if (variants.empty()) throw UsageError("--variants: list must not be empty");
  }
  const auto rhos = parse_list<double>(args.rhos, "--rho");
  for (double r : rhos) {
    if (!(r >= 0.0)) throw UsageError("--rho: offsets need a non-negative standard deviation");
  }
  for (Variant v : variants) require_dims(args.cfg.dims, v);
  const std::uint64_t seed = resolve_seed(args.cfg, err);

  Rng rng(seed);
  const auto batch = attention::random_batch(args.tokens, args.cfg.dims, rng);
  const auto coords = uniform_coords(args.tokens, args.cfg.dims.axes, rng);

  json rows = json::array();
  std::ostringstream csv;
  csv << "variant,rho,max_logit_drift\n";
  for (Variant v : variants) {
    const auto set = build_set(v, args.cfg.dims, seed);
    for (const auto& row : verify::check_offset_invariance(set, batch, coords, rhos, args.draws, seed)) {
      csv << to_string(v) << ',' << io::format_double(row.rho) << ',' << io::format_double(row.max_drift) << '\n';
      rows.push_back({{"variant", std::string(to_string(v))}, {"rho", row.rho}, {"max_logit_drift", row.max_drift}});
    }
  }
  emit(args.cfg, args.cfg.format == "json" ? rows.dump(2) + "\n" : csv.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  RunConfig cfg;
  toytask::TrainOptions opts;
  std::size_t samples = 8;
  std::size_t tokens = 8;
  double shift_rho = 1.0;
};

int cmd_train_toy(TrainArgs& args, std::ostream& out, std::ostream& err) {
  const Variant variant = require_variant(args.cfg.variant);
  if (!is_trainable(variant)) throw UsageError("train-toy needs a trainable variant (liere, ap or ld)");
  require_dims(args.cfg.dims, variant);
  require_dims(args.cfg.dims, Variant::ComRoPE_LD);
  if (!(args.opts.lr >= 0.0)) throw UsageError("--lr must be non-negative");
  args.opts.seed = resolve_seed(args.cfg, err);

  const auto data = toytask::gen_synthetic(args.tokens, args.cfg.dims, args.samples, args.opts.seed);
  std::optional<toytask::TrainResult> trained;
  try {
    trained = toytask::train(data, variant, args.opts);
  } catch (const toytask::TrainingDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitSuiteFailure;
  }
  const auto& result = *trained;

  if (args.cfg.format == "json") {
    json rows = json::array();
    for (const auto& e : result.trace) rows.push_back({{"step", e.step}, {"loss", e.loss}, {"grad_norm", e.grad_norm}});
    emit(args.cfg, rows.dump(2) + "\n", out);
  } else {
    std::ostringstream os;
    toytask::emit_trace_csv(result.trace, os);
    emit(args.cfg, os.str(), out);
  }

  if (!result.trace.empty()) {
    const double final_loss = toytask::evaluate(data, result.set);
    const double shifted = toytask::evaluate_shifted(data, result.set, {args.shift_rho, args.opts.seed});
    err << "initial loss " << io::format_double(result.trace.front().loss) << ", final loss "
        << io::format_double(final_loss) << ", shifted-eval change " << io::format_double(shifted - final_loss)
        << " (rho " << io::format_double(args.shift_rho) << ")\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotary position encodings with trainable commuting angle matrices"};
  app.require_subcommand(1);

  VerifyArgs verify_args;
  verify_args.cfg.format = "json";
  auto* verify_cmd = app.add_subcommand("verify", "run the rotation theorem suites for one variant");
  add_common(verify_cmd, verify_args.cfg);
  verify_cmd->add_option("--trials", verify_args.trials, "trials per suite")->capture_default_str();
  verify_cmd->add_option("--tokens", verify_args.tokens, "tokens in the offset-invariance batch")->capture_default_str();
  verify_cmd->add_option("--draws", verify_args.draws, "offset draws per rho")->capture_default_str();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "parameter counts and rotation timings");
  add_common(bench_cmd, bench_args.cfg, false);
  bench_args.variant_opt = bench_cmd->add_option("--variant", bench_args.cfg.variant, "single variant (default: liere, ap, ld)");
  bench_args.sweep_opt = bench_cmd->add_option("--sweep-b", bench_args.sweep_b, "comma-separated block sizes (default: --b)");
  bench_cmd->add_option("--n", bench_args.tokens, "tokens per timed batch")->capture_default_str();
  bench_cmd->add_option("--repeats", bench_args.repeats, "timed repeats (at least 5)")->capture_default_str();
  bench_cmd->add_flag("--params-only", bench_args.params_only, "skip timing");
  bench_cmd->add_flag("--parallel", bench_args.parallel, "time with all OpenMP threads");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate-offset", "logit drift under global coordinate offsets");
  add_common(ablate_cmd, ablate_args.cfg, false);
  ablate_cmd->add_option("--variants", ablate_args.variants, "comma-separated variants")->capture_default_str();
  ablate_cmd->add_option("--rho", ablate_args.rhos, "comma-separated offset standard deviations")->capture_default_str();
  ablate_cmd->add_option("--draws", ablate_args.draws, "offset draws per rho")->capture_default_str();
  ablate_cmd->add_option("--tokens", ablate_args.tokens, "tokens in the batch")->capture_default_str();

  TrainArgs train_args;
  train_args.cfg.dims = ModelDims{16, 1, 4, 2, 1};
  auto* train_cmd = app.add_subcommand("train-toy", "gradient descent on the synthetic relative-position task");
  add_common(train_cmd, train_args.cfg);
  train_cmd->add_option("--steps", train_args.opts.steps, "gradient steps")->capture_default_str();
  train_cmd->add_option("--lr", train_args.opts.lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--samples", train_args.samples, "dataset size")->capture_default_str();
  train_cmd->add_option("--tokens", train_args.tokens, "tokens per sample")->capture_default_str();
  train_cmd->add_option("--init-scale", train_args.opts.init_scale, "std of the initial parameters")->capture_default_str();
  train_cmd->add_option("--shift-rho", train_args.shift_rho, "offset std for the shifted evaluation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify_cmd) return cmd_verify(verify_args, out, err);
    if (*bench_cmd) return cmd_bench(bench_args, out, err);
    if (*ablate_cmd) return cmd_ablate_offset(ablate_args, out, err);
    if (*train_cmd) return cmd_train_toy(train_args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSuiteFailure;
  }
  return kExitUsage;
}

}  // namespace comrope::cli
