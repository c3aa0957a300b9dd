// qmi: instance generation, verification suites and SSA decompositions.
//
// Exit status: 0 every check passed, 1 a verification failed, 2 bad usage or input.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qmi/matrix_io.hpp"
#include "qmi/suites.hpp"

namespace {

using qmi::json;

struct Globals {
  std::string report;
  std::optional<double> tol;
  int threads = 1;
  std::string config;
  bool no_timing = false;
};

/// Config file: JSON, either nested {"quadrature": {"nodes_unit": 100}} or
/// flat {"quadrature.nodes_unit": 100}. Command-line flags win.
class ConfigFile {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    const json j = qmi::read_json_file(path);
    if (!j.is_object()) throw qmi::InvalidInput("config: top level must be an object");
    flatten("", j);
    for (const auto& [k, v] : values_)
      if (!known(k)) throw qmi::InvalidInput("config: unknown key '" + k + "'");
  }

  template <class T>
  void apply(const std::string& key, T& target) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    try {
      target = it->second.get<T>();
    } catch (const json::exception&) {
      throw qmi::InvalidInput("config: key '" + key + "' has the wrong type");
    }
  }

  json echo() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  void flatten(const std::string& prefix, const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it.value().is_object()) flatten(key, it.value());
      else values_[key] = it.value();
    }
  }

  static bool known(const std::string& k) {
    static const std::vector<std::string> keys{
        "quadrature.nodes_half_line", "quadrature.nodes_unit", "quadrature.tol", "cross.method",
        "lieb.delta_convention",      "relent.k_max",          "ssa.nodes",
        "ssa.k_max",                  "ssa.prefactor",         "tol",            "threads"};
    return std::find(keys.begin(), keys.end(), k) != keys.end();
  }

  std::map<std::string, json> values_;
};

struct Quadrature {
  int nodes_half_line = 200;
  int nodes_unit = 100;
  double tol = 1e-10;
};

json to_json(const Quadrature& q) {
  return {{"nodes_half_line", q.nodes_half_line}, {"nodes_unit", q.nodes_unit}, {"tol", q.tol}};
}

void emit(const Globals& g, json report) {
  if (g.no_timing) report = qmi::strip_timing(report);
  const std::string text = report.dump(2) + "\n";
  if (g.report.empty() || g.report == "-") std::cout << text;
  else qmi::write_atomically(g.report, text);
}

void print_line(const qmi::VerificationReport& r) {
  std::fprintf(stderr, "seed %llu  %-32s %s  discrepancy %.3e  tol %.1e\n",
               static_cast<unsigned long long>(r.seed.value_or(0)), r.check.c_str(), r.pass ? "PASS" : "FAIL",
               r.discrepancy, r.tolerance);
}

/// Runs one routine per seed, in parallel if asked; records stay in seed
/// order. Numerical trouble on a seed becomes a failing record.
template <class Fn>
std::vector<qmi::VerificationReport> run_seeds(int first, int count, int threads, const std::string& check, Fn&& fn) {
  if (count < 1) throw qmi::InvalidInput("--seeds must be positive");
  std::vector<qmi::VerificationReport> out(count);
  qmi::parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t seed = static_cast<std::uint64_t>(first) + i;
    try {
      out[i] = fn(seed);
    } catch (const qmi::InvalidInput&) {
      throw;
    } catch (const qmi::Error& e) {
      qmi::VerificationReport r;
      r.check = check;
      r.property = "evaluation failed";
      r.seed = seed;
      r.quantities["error"] = e.what();
      r.pass = false;
      out[i] = r;
    }
  });
  return out;
}

int finish_records(const Globals& g, const std::string& command, json config, const std::vector<qmi::VerificationReport>& recs) {
  json records = json::array();
  int passed = 0;
  for (const auto& r : recs) {
    print_line(r);
    records.push_back(qmi::to_json(r));
    passed += r.pass;
  }
  const bool ok = passed == static_cast<int>(recs.size());
  json rep;
  rep["schema"] = "qmi-report/1";
  rep["command"] = command;
  rep["config"] = std::move(config);
  rep["records"] = records;
  rep["summary"] = {{"records", recs.size()}, {"passed", passed}};
  rep["pass"] = ok;
  emit(g, rep);
  std::fprintf(stderr, "%s: %d/%zu passed\n", command.c_str(), passed, recs.size());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified second-order identities for matrix means, Lieb concavity, relative entropy and SSA"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--report", g.report, "Write the JSON report here (default: stdout)");
  app.add_option("--tol", g.tol, "Tolerance override for the selected check")->check(CLI::PositiveNumber);
  app.add_option("--threads", g.threads, "Worker threads across seeds")->check(CLI::Range(1, 256));
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_flag("--no-timing", g.no_timing, "Omit wall-clock fields so reports compare byte for byte");

  int seeds = 10, first_seed = 1;
  auto add_seeds = [&](CLI::App* s) {
    s->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    s->add_option("--first-seed", first_seed, "First seed")->check(CLI::NonNegativeNumber);
  };

  // gen
  std::string kind = "state", out_path;
  std::vector<int> gen_dims{2, 2, 2};
  std::uint64_t gen_seed = 1;
  double spread = 1.0;
  auto* gen = app.add_subcommand("gen", "Generate a random full-rank instance");
  gen->add_option("--kind", kind, "state | mean-pair | segment")->check(CLI::IsMember({"state", "mean-pair", "segment"}));
  gen->add_option("--dims,--dim", gen_dims, "Dimensions: d_A d_B d_C for a state, n otherwise");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--spread", spread, "Spectral spread of exp(spread G/sqrt(n))")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Output file (default: stdout)");

  // verify-cross
  qmi::CrossCheckConfig cc;
  std::string cross_method = "quadrature";
  auto* vc = app.add_subcommand("verify-cross", "Cross against finite differences of the geometric mean");
  vc->add_option("--dim", cc.dim)->check(CLI::Range(1, 64));
  vc->add_option("--step", cc.step, "Finite-difference step")->check(CLI::PositiveNumber);
  vc->add_option("--method", cross_method)->check(CLI::IsMember({"quadrature", "closed_form"}));
  add_seeds(vc);

  // verify-power
  qmi::PowerCheckConfig pc;
  auto* vp = app.add_subcommand("verify-power", "Second-order expansion of matrix powers");
  vp->add_option("--dim", pc.dim)->check(CLI::Range(1, 64));
  vp->add_option("--q", pc.q, "Exponent in [0,1] (default: drawn per seed)")->check(CLI::Range(0.0, 1.0));
  add_seeds(vp);

  // verify-lieb
  qmi::LiebCheckConfig lc;
  std::vector<int> lieb_dims{2, 2};
  std::string convention = "level_k";
  auto* vl = app.add_subcommand("verify-lieb", "Dyadic second-derivative construction against finite differences");
  vl->add_option("--dims", lieb_dims, "N M")->expected(2);
  vl->add_option("--q", lc.q)->check(CLI::Range(0.0, 1.0));
  vl->add_option("--r", lc.r)->check(CLI::Range(0.0, 1.0));
  vl->add_option("--level", lc.level, "Level of the random dyadic exponent")->check(CLI::Range(1, 12));
  vl->add_option("--delta-convention", convention)->check(CLI::IsMember({"level_k", "level_k_minus_1"}));
  add_seeds(vl);

  // verify-relent
  qmi::RelentCheckConfig rc;
  auto* vr = app.add_subcommand("verify-relent", "Joint convexity certificate for the relative entropy");
  vr->add_option("--dim", rc.dim)->check(CLI::Range(1, 6));
  vr->add_option("--kmax", rc.k_max)->check(CLI::Range(3, 30));
  vr->add_option("--t", rc.t)->check(CLI::Range(0.0, 1.0));
  add_seeds(vr);

  // verify-ssa and decompose share the decomposition options.
  qmi::SsaOptions so;
  std::vector<int> ssa_dims{2, 2, 2};
  std::string prefactor = "unrolled", ssa_cross = "closed_form";
  auto add_ssa = [&](CLI::App* s) {
    s->add_option("--nodes", so.nodes, "sigma-nodes per double integral (even)")->check(CLI::PositiveNumber);
    s->add_option("--kmax", so.k_max, "Gamma recursion depth")->check(CLI::Range(3, 30));
    s->add_option("--prefactor", prefactor)->check(CLI::IsMember({"unrolled", "displayed"}));
    s->add_option("--cross-method", ssa_cross)->check(CLI::IsMember({"quadrature", "closed_form"}));
  };
  auto* vs = app.add_subcommand("verify-ssa", "CMI decomposition on random full-rank states");
  vs->add_option("--dims", ssa_dims, "d_A d_B d_C")->expected(3);
  add_seeds(vs);
  add_ssa(vs);

  std::string in_path;
  std::optional<std::uint64_t> dec_seed;
  auto* dc = app.add_subcommand("decompose", "Decompose the CMI of one state");
  dc->add_option("--in", in_path, "State file")->check(CLI::ExistingFile);
  dc->add_option("--seed", dec_seed, "Use a random (2,2,2) state with this seed instead of --in");
  add_ssa(dc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ConfigFile cfg;
    cfg.load(g.config);
    if (g.threads == 1) cfg.apply("threads", g.threads);
    if (!g.tol) {
      double t = 0;
      if (cfg.echo().contains("tol")) {
        cfg.apply("tol", t);
        g.tol = t;
      }
    }
    if (g.tol && !(*g.tol > 0.0)) throw qmi::InvalidInput("tolerances must be positive");
    Quadrature quad;
    cfg.apply("quadrature.nodes_half_line", quad.nodes_half_line);
    cfg.apply("quadrature.nodes_unit", quad.nodes_unit);
    cfg.apply("quadrature.tol", quad.tol);
    if (quad.nodes_half_line < 2 || quad.nodes_unit < 2) throw qmi::InvalidInput("node counts must be at least 2");

    auto base_config = [&](json extra) {
      json j;
      j["seeds"] = seeds;
      j["first_seed"] = first_seed;
      j["threads"] = g.threads;
      j["quadrature"] = to_json(quad);
      for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
      j["config_file"] = cfg.echo();
      return j;
    };

    if (*gen) {
      json j;
      if (kind == "state") {
        if (gen_dims.size() != 3) throw qmi::InvalidInput("gen: a state needs --dims d_A d_B d_C");
        for (int d : gen_dims)
          if (d < 1 || d > 6) throw qmi::InvalidInput("gen: state dimensions must lie in 1..6");
        j = qmi::to_json(qmi::random_state(gen_seed, {gen_dims[0], gen_dims[1], gen_dims[2]}, spread));
      } else {
        if (gen_dims.size() != 1) throw qmi::InvalidInput("gen: --dim takes one value for " + kind);
        const int n = gen_dims[0];
        if (n < 1 || n > 64) throw qmi::InvalidInput("gen: dimension must lie in 1..64");
        qmi::InstanceGenerator ig(gen_seed);
        if (kind == "mean-pair") {
          const auto a = ig.positive_definite(n, spread);
          const auto b = ig.positive_definite(n, spread);
          j = qmi::to_json(qmi::MeanPair(a, b));
        } else {
          for (const char* name : {"A1", "A2", "B1", "B2"})
            j[name] = qmi::to_json(qmi::TaggedMatrix{{n}, ig.density(n, spread).mat()});
          j["t0"] = 0.5;
        }
      }
      const std::string text = j.dump(2) + "\n";
      if (out_path.empty()) std::cout << text;
      else qmi::write_atomically(out_path, text);
      return 0;
    }

    if (*vc) {
      cc.tol = g.tol.value_or(cc.tol);
      cfg.apply("cross.method", cross_method);
      cc.cross.method = qmi::parse_cross_method(cross_method);
      cc.cross.nodes = quad.nodes_half_line;
      const auto recs = run_seeds(first_seed, seeds, g.threads, "geometric_mean.cross",
                                  [&](std::uint64_t s) { return qmi::verify_cross_seed(s, cc); });
      json extra = {{"dim", cc.dim}, {"tol", cc.tol}, {"method", cross_method}};
      extra["step"] = cc.step ? json(*cc.step) : json("default");
      return finish_records(g, "verify-cross", base_config(extra), recs);
    }

    if (*vp) {
      pc.tol = g.tol.value_or(pc.tol);
      pc.nodes_unit = quad.nodes_unit;
      const auto recs = run_seeds(first_seed, seeds, g.threads, "power_perturbation.expansion",
                                  [&](std::uint64_t s) { return qmi::verify_power_seed(s, pc); });
      json extra = {{"dim", pc.dim}, {"tol", pc.tol}};
      extra["q"] = pc.q ? json(*pc.q) : json("per-seed");
      return finish_records(g, "verify-power", base_config(extra), recs);
    }

    if (*vl) {
      if (lieb_dims.size() != 2 || lieb_dims[0] < 1 || lieb_dims[1] < 1 || lieb_dims[0] > 4 || lieb_dims[1] > 4)
        throw qmi::InvalidInput("verify-lieb: --dims takes two values in 1..4");
      if (lc.q.has_value() != lc.r.has_value()) throw qmi::InvalidInput("verify-lieb: give both --q and --r or neither");
      lc.n = lieb_dims[0];
      lc.m = lieb_dims[1];
      lc.tol = g.tol.value_or(lc.tol);
      cfg.apply("lieb.delta_convention", convention);
      lc.convention = qmi::parse_delta_convention(convention);
      std::string cm = "quadrature";
      cfg.apply("cross.method", cm);
      lc.cross.method = qmi::parse_cross_method(cm);
      lc.cross.nodes = quad.nodes_half_line;
      const auto recs = run_seeds(first_seed, seeds, g.threads, "lieb.second_derivative",
                                  [&](std::uint64_t s) { return qmi::verify_lieb_seed(s, lc); });
      json extra = {{"dims", lieb_dims}, {"level", lc.level}, {"delta_convention", convention}, {"tol", lc.tol}};
      if (lc.q) {
        extra["q"] = *lc.q;
        extra["r"] = *lc.r;
      }
      return finish_records(g, "verify-lieb", base_config(extra), recs);
    }

    if (*vr) {
      rc.tol = g.tol.value_or(rc.tol);
      cfg.apply("relent.k_max", rc.k_max);
      if (!(rc.t > 0.0 && rc.t < 1.0)) throw qmi::InvalidInput("verify-relent: --t must lie in (0,1)");
      rc.relent.nodes_unit = quad.nodes_unit;
      std::string cm = "quadrature";
      cfg.apply("cross.method", cm);
      rc.relent.cross.method = qmi::parse_cross_method(cm);
      rc.relent.cross.nodes = quad.nodes_half_line;
      const auto recs = run_seeds(first_seed, seeds, g.threads, "relative_entropy.joint_convexity",
                                  [&](std::uint64_t s) { return qmi::verify_relent_seed(s, rc); });
      json extra = {{"dim", rc.dim}, {"k_max", rc.k_max}, {"t", rc.t}, {"tol", rc.tol}};
      return finish_records(g, "verify-relent", base_config(extra), recs);
    }

    if (*vs || *dc) {
      cfg.apply("ssa.nodes", so.nodes);
      cfg.apply("ssa.k_max", so.k_max);
      cfg.apply("ssa.prefactor", prefactor);
      cfg.apply("cross.method", ssa_cross);
      so.prefactor = qmi::parse_prefactor(prefactor);
      so.cross_method = qmi::parse_cross_method(ssa_cross);
      so.tol = g.tol.value_or(so.tol);

      auto record = [&](const qmi::DecompositionReport& r, std::optional<std::uint64_t> seed) {
        json j;
        if (seed) j["seed"] = *seed;
        const json body = qmi::to_json(r);
        for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
        const std::string who = seed ? "seed " + std::to_string(*seed) : std::string("state");
        std::fprintf(stderr, "%s  cmi %.10f  sum %.10f  relative gap %.3e  %s\n", who.c_str(), r.cmi_entropic,
                     r.reconstruction, r.relative_gap, r.pass ? "PASS" : "FAIL");
        return j;
      };

      if (*dc) {
        if (in_path.empty() == !dec_seed.has_value())
          throw qmi::InvalidInput("decompose: give exactly one of --in and --seed");
        const qmi::TripartiteState st = dec_seed ? qmi::random_state(*dec_seed, {2, 2, 2}) : qmi::read_state(in_path);
        so.threads = g.threads;
        const qmi::DecompositionReport r = qmi::delta_terms(st, so);
        json rep;
        rep["schema"] = "ssa-report/1";
        json conf = qmi::to_json(so);
        conf["input"] = dec_seed ? json("random seed " + std::to_string(*dec_seed)) : json(in_path);
        conf["config_file"] = cfg.echo();
        rep["config"] = conf;
        const json body = record(r, dec_seed);
        for (auto it = body.begin(); it != body.end(); ++it) rep[it.key()] = it.value();
        emit(g, rep);
        return r.pass ? 0 : 1;
      }

      if (ssa_dims.size() != 3) throw qmi::InvalidInput("verify-ssa: --dims takes d_A d_B d_C");
      const std::array<int, 3> dims{ssa_dims[0], ssa_dims[1], ssa_dims[2]};
      if (seeds < 1) throw qmi::InvalidInput("--seeds must be positive");
      std::vector<json> recs(seeds);
      std::vector<int> ok(seeds, 0);
      qmi::SsaOptions inner = so;
      inner.threads = 1;
      qmi::parallel_for(seeds, g.threads, [&](std::size_t i) {
        const std::uint64_t seed = static_cast<std::uint64_t>(first_seed) + i;
        const qmi::TripartiteState st = qmi::random_state(seed, dims);
        try {
          const qmi::DecompositionReport r = qmi::delta_terms(st, inner);
          recs[i] = record(r, seed);
          ok[i] = r.pass;
        } catch (const qmi::InvalidInput&) {
          throw;
        } catch (const qmi::Error& e) {
          recs[i] = {{"seed", seed}, {"error", e.what()}, {"pass", false}};
        }
      });
      int passed = 0;
      for (int v : ok) passed += v;
      json rep;
      rep["schema"] = "ssa-report/1";
      json conf = qmi::to_json(so);
      conf["dims"] = ssa_dims;
      conf["seeds"] = seeds;
      conf["first_seed"] = first_seed;
      conf["threads"] = g.threads;
      conf["config_file"] = cfg.echo();
      rep["config"] = conf;
      rep["records"] = recs;
      rep["summary"] = {{"records", seeds}, {"passed", passed}};
      rep["pass"] = passed == seeds;
      emit(g, rep);
      std::fprintf(stderr, "verify-ssa: %d/%d passed\n", passed, seeds);
      return passed == seeds ? 0 : 1;
    }
  } catch (const qmi::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const qmi::VerificationFailure& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return 1;
  } catch (const qmi::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
