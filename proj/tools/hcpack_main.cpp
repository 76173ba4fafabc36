// hcpack: drivers for the hypercube packing constructions, the bounded-space
// online harness and the packing game checks.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>
#include <sstream>

#include "hcpack/errors.hpp"
#include "hcpack/game.hpp"
#include "hcpack/online.hpp"
#include "hcpack/packing.hpp"
#include "hcpack/reproduce.hpp"
#include "hcpack/serialize.hpp"

namespace fs = std::filesystem;
using namespace hcp;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string log_base = "natural";
  std::string out_dir = ".";
  bool record_time = false;
  std::string command;
};

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

RunManifest make_manifest(const Globals& g, const std::vector<std::string>& inputs) {
  RunManifest m;
  m.command = g.command;
  m.seed = g.seed;
  m.log_base = parse_log_base(g.log_base);
  if (g.record_time) m.timestamp = now_utc();
  for (const auto& in : inputs) m.inputs[in] = sha256_file(in);
  return m;
}

fs::path out_path(const Globals& g, const std::string& given, const std::string& fallback) {
  fs::path p = given.empty() ? fs::path(fallback) : fs::path(given);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

void emit(const fs::path& path, Json j, const RunManifest& m) {
  j["manifest"] = manifest_json(m);
  write_text_file(path, dump(j));
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InputError("bad dimension list '" + s + "'");
    }
  }
  if (out.empty()) throw InputError("empty dimension list");
  return out;
}

// Scale C of an adversarial instance built from U: every segment holds C * nu_k items.
BigInt infer_scale(const TypedPacking& U, const Instance& inst) {
  std::optional<BigInt> C;
  for (const auto& s : inst.segments) {
    auto it = U.nu.find(s.k);
    if (it == U.nu.end()) throw InputError("instance class " + std::to_string(s.k) + " is not in the packing");
    const BigInt n = static_cast<unsigned long>(it->second);
    const BigInt f = static_cast<unsigned long>(s.count);
    if (f % n != 0) throw InputError("instance is not a multiple of the packing");
    const BigInt c = f / n;
    if (C && *C != c) throw InputError("instance segments use different scales");
    C = c;
  }
  if (!C) throw InputError("instance has no segments");
  return *C;
}

// Accepts a bare config or a poa/spoa report, which carries its config under "P_prime".
GameConfig load_config(const std::string& path) {
  const auto j = read_json_file(path);
  if (!j.contains("d") && j.contains("P_prime")) return config_from_json(j.at("P_prime"));
  return config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypercube packing constructions, bounded-space online harness and packing-game checks"};
  app.require_subcommand(1);
  Globals g;
  // The output location is left out so that bundles written to different
  // directories hash the same.
  g.command = "hcpack";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out-dir") {
      ++i;
      continue;
    }
    if (a.rfind("--out-dir=", 0) == 0) continue;
    g.command += " " + a;
  }
  app.add_option("--seed", g.seed, "Root seed for every random stream");
  app.add_option("--log-base", g.log_base, "Logarithm in S and S'")->check(CLI::IsMember({"natural", "2"}));
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
  app.add_flag("--record-time", g.record_time, "Write a timestamp into manifests (breaks byte-identical reruns)");

  // pack
  auto* pack = app.add_subcommand("pack", "Build, verify and weigh single-bin packings");
  pack->require_subcommand(1);
  auto* build = pack->add_subcommand("build", "Build the packing of lemma A or B, or the warm-up family");
  std::string lemma = "A";
  int d = 3;
  std::string eps_text;
  int d0 = 1000000;
  std::size_t word_budget = 256;
  std::size_t materialize_cap = 20000;
  std::string packing_out, family_out, report_out;
  build->add_option("--lemma", lemma, "A, B or warmup")->check(CLI::IsMember({"A", "B", "warmup"}));
  build->add_option("--d", d, "Dimension")->required();
  build->add_option("--epsilon", eps_text, "Override epsilon (p/q)");
  build->add_option("--d0", d0, "Assert the asymptotic targets from this dimension on");
  build->add_option("--word-budget", word_budget, "Words per class when a language is too large");
  build->add_option("--materialize-cap", materialize_cap, "Largest packing built in full");
  build->add_option("--out", packing_out, "Packing file (default packing.json)");
  build->add_option("--family-out", family_out, "Family file (default family.json)");
  build->add_option("--report-out", report_out, "Driver report (default report.json)");

  auto* verify = pack->add_subcommand("verify", "Check containment and disjointness exactly");
  std::string packing_in;
  verify->add_option("packing", packing_in, "Packing JSON")->required()->check(CLI::ExistingFile);

  auto* weight = pack->add_subcommand("weight", "Weight sum nu_k/(k-1)^d of a packing");
  weight->add_option("packing", packing_in, "Packing JSON")->required()->check(CLI::ExistingFile);

  // online
  auto* online = app.add_subcommand("online", "Bounded-space online packing");
  online->require_subcommand(1);
  auto* adversary = online->add_subcommand("adversary", "Adversarial instance from a packing");
  int M = 1;
  std::string scale_text, instance_out;
  std::vector<int> order;
  adversary->add_option("--packing", packing_in, "Packing JSON")->required()->check(CLI::ExistingFile);
  adversary->add_option("--M", M, "Open bins allowed")->check(CLI::PositiveNumber);
  adversary->add_option("--scale", scale_text, "Scale C (default 2MN)");
  adversary->add_option("--order", order, "Segment order by class");
  adversary->add_option("--out", instance_out, "Instance file (default instance.json)");

  auto* run = online->add_subcommand("run", "Run an algorithm through the checking harness");
  std::string alg = "class-harmonic", instance_in, run_report;
  bool trace = false;
  run->add_option("--alg", alg, "Algorithm")->check(CLI::IsMember({"class-harmonic"}));
  run->add_option("--instance", instance_in, "Instance JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--M", M, "Open bins allowed")->check(CLI::PositiveNumber);
  run->add_option("--packing", packing_in, "Packing the instance came from, for the certificates")
      ->check(CLI::ExistingFile);
  run->add_option("--report", run_report, "Report file (default run.json)");
  run->add_flag("--trace", trace, "Include every placement in the report");

  // game
  auto* game = app.add_subcommand("game", "Selfish bin packing game");
  game->require_subcommand(1);
  std::string config_in, mode = "insertion", game_out;
  std::size_t repack_cap = 12;
  auto add_mode = [&](CLI::App* c) {
    c->add_option("--mode", mode, "Move feasibility")->check(CLI::IsMember({"insertion", "repack"}));
    c->add_option("--repack-cap", repack_cap, "Most cubes in one repack search");
  };
  auto* nash = game->add_subcommand("nash-check", "Exhaustive unilateral move search");
  nash->add_option("config", config_in, "Config JSON")->required()->check(CLI::ExistingFile);
  add_mode(nash);

  auto* strong = game->add_subcommand("strong-check", "Exhaustive coalition search");
  std::size_t coalition_cap = 3;
  strong->add_option("config", config_in, "Config JSON")->required()->check(CLI::ExistingFile);
  strong->add_option("--coalition-cap", coalition_cap, "Largest coalition")->check(CLI::PositiveNumber);
  add_mode(strong);

  auto* dynamics = game->add_subcommand("dynamics", "Best-response dynamics");
  std::string policy = "best";
  std::size_t max_steps = 10000;
  std::uint64_t dyn_seed = 0;
  bool dyn_seed_set = false;
  dynamics->add_option("config", config_in, "Config JSON")->required()->check(CLI::ExistingFile);
  dynamics->add_option("--policy", policy, "first, best or random")->check(CLI::IsMember({"first", "best", "random"}));
  dynamics->add_option("--max-steps", max_steps, "Step budget");
  auto* seed_opt = dynamics->add_option("--seed", dyn_seed, "Seed for the random policy (default: global seed)");
  dynamics->add_option("--out", game_out, "Final config file (default dynamics.json)");
  add_mode(dynamics);

  auto* poa = game->add_subcommand("poa", "Price-of-anarchy instance from a packing");
  std::size_t item_cap = 200000;
  poa->add_option("--packing", packing_in, "Packing JSON")->required()->check(CLI::ExistingFile);
  poa->add_option("--item-cap", item_cap, "Largest instance to materialize");
  poa->add_option("--out", game_out, "Report file (default poa.json)");
  add_mode(poa);

  auto* spoa = game->add_subcommand("spoa", "Strong price-of-anarchy instance from a power-of-two packing");
  spoa->add_option("--packing", packing_in, "Packing JSON")->required()->check(CLI::ExistingFile);
  spoa->add_option("--coalition-cap", coalition_cap, "Largest coalition")->check(CLI::PositiveNumber);
  spoa->add_option("--item-cap", item_cap, "Largest instance to materialize");
  spoa->add_option("--out", game_out, "Report file (default spoa.json)");
  add_mode(spoa);

  auto* prop1 = game->add_subcommand("prop1", "Check (1-1/k)^d + 1/l^d < (1-1/l)^d for all k < l <= kmax, d <= dmax");
  int kmax = 100, dmax = 20;
  prop1->add_option("--kmax", kmax)->check(CLI::Range(3, 100000));
  prop1->add_option("--dmax", dmax)->check(CLI::Range(2, 100000));

  // reproduce
  auto* repro = app.add_subcommand("reproduce", "Run every stage for a list of dimensions");
  std::string dims = "2,3,4";
  std::size_t online_cap = 200000, game_cap = 1000;
  repro->add_option("--d", dims, "Comma-separated dimensions");
  repro->add_option("--M", M, "Open bins for the adversary stage")->check(CLI::PositiveNumber);
  repro->add_option("--online-item-cap", online_cap, "Skip adversarial instances above this size");
  repro->add_option("--game-item-cap", game_cap, "Scale game instances down to this size");
  repro->add_option("--coalition-cap", coalition_cap, "Largest coalition for the strong check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  dyn_seed_set = seed_opt->count() > 0;

  try {
    const LogBase base = parse_log_base(g.log_base);
    GameOptions gopt;
    gopt.mode = parse_feasibility(mode);
    gopt.repack_cap = repack_cap;

    if (*build) {
      DriverOptions opt;
      opt.log_base = base;
      opt.seed = g.seed;
      opt.d0 = d0;
      opt.word_budget = word_budget;
      opt.materialize_cap = materialize_cap;
      if (!eps_text.empty()) opt.epsilon_override = Rat::parse(eps_text);
      DriverReport r;
      if (lemma == "warmup") {
        if (d < 2) throw InputError("d must be at least 2");
        r.lemma = "warmup";
        r.d = d;
        r.log_base = base;
        r.family = warmup_family(d);
        r.epsilon = opt.epsilon_override.value_or(Rat(1, static_cast<long>(d) * d));
        r.family_label = "warmup";
        r.certificate = certify_family(r.family);
        if (!r.certificate.ok) throw VerificationError("warm-up family failed certification");
        r.packing = build_U(r.family, r.epsilon, Selection::everything(materialize_cap));
        r.family_weight = *r.packing.family_weight;
        r.recomputed_weight = weight_from_cubes(r.packing.bin);
        for (const auto& L : r.family.languages) r.language_sizes[L.k()] = L.size();
        r.bad_fraction = bad_fractions(r.family);
      } else {
        r = lemma == "A" ? lemma_A_driver(d, opt) : lemma_B_driver(d, opt);
      }
      const auto m = make_manifest(g, {});
      emit(out_path(g, packing_out, "packing.json"), packing_json(r.packing), m);
      emit(out_path(g, family_out, "family.json"), family_json(r.family), m);
      Json rep = driver_json(r);
      emit(out_path(g, report_out, "report.json"), rep, m);
      print(rep);
      return 0;
    }
    if (*verify) {
      const auto j = read_json_file(packing_in);
      const Bin b = bin_from_json(j);
      const auto rep = verify_bin(b);
      Json out{{"ok", rep.ok()},
               {"cubes", b.cubes.size()},
               {"dimension_ok", rep.dimension_ok},
               {"containment_ok", rep.containment_ok},
               {"disjoint_ok", rep.disjoint_ok},
               {"pairs_checked", rep.pairs_checked}};
      out["uncontained"] = rep.uncontained ? Json(*rep.uncontained) : Json(nullptr);
      out["offending_pair"] =
          rep.offending_pair ? Json::array({rep.offending_pair->first, rep.offending_pair->second}) : Json(nullptr);
      print(out);
      return rep.ok() ? 0 : 1;
    }
    if (*weight) {
      const auto U = packing_from_json(read_json_file(packing_in));
      Json nu = Json::object();
      for (const auto& [k, n] : U.nu) nu[std::to_string(k)] = n;
      print(Json{{"weight", rat_json(U.weight)},
                 {"weight_by_cube", rat_json(weight_from_cubes(U.bin))},
                 {"nu", nu},
                 {"approx", U.weight.to_double()}});
      return 0;
    }
    if (*adversary) {
      const auto U = packing_from_json(read_json_file(packing_in));
      AdversaryOptions ao;
      ao.order = order;
      if (!scale_text.empty()) ao.scale = parse_big(scale_text);
      const BigInt C = ao.scale.value_or(full_scale(U, M));
      const auto inst = adversarial_instance(U, M, ao);
      const auto lb = lower_bound_certificate(U, M, C);
      const auto offline = offline_certificate(U, inst, C);
      if (!offline.ok()) throw VerificationError("offline certificate failed");
      const auto m = make_manifest(g, {packing_in});
      Json j = instance_json(inst);
      j["scale"] = big_str(C);
      j["M"] = M;
      j["lower_bound"] = lower_bound_json(lb);
      j["offline_bins"] = big_str(offline.bins);
      emit(out_path(g, instance_out, "instance.json"), j, m);
      print(Json{{"items", inst.size()},
                 {"scale", big_str(C)},
                 {"lower_bound", big_str(lb.total)},
                 {"offline_bins", big_str(offline.bins)}});
      return 0;
    }
    if (*run) {
      const auto inst = instance_from_json(read_json_file(instance_in));
      auto algorithm = make_class_harmonic(M);
      const auto result = run_bounded_space(*algorithm, inst, M, trace);
      RatioReport ratio;
      ratio.bins_used = result.bins_used;
      std::vector<std::string> inputs{instance_in};
      Json extra = Json::object();
      if (!packing_in.empty()) {
        inputs.push_back(packing_in);
        const auto U = packing_from_json(read_json_file(packing_in));
        const BigInt C = infer_scale(U, inst);
        const auto lb = lower_bound_certificate(U, M, C);
        const auto offline = offline_certificate(U, inst, C);
        if (!offline.ok()) throw VerificationError("offline certificate failed");
        ratio = ratio_report(result, offline, lb);
        extra["lower_bound"] = lower_bound_json(lb);
        extra["bound_holds"] = BigInt(static_cast<unsigned long>(result.bins_used)) >= lb.total;
      }
      Json j = run_json(result, ratio);
      for (auto& [k, v] : extra.items()) j[k] = v;
      emit(out_path(g, run_report, "run.json"), j, make_manifest(g, inputs));
      j.erase("trace");
      print(j);
      if (extra.contains("bound_holds") && !extra["bound_holds"].get<bool>()) return 1;
      return 0;
    }
    if (*nash) {
      const auto cfg = load_config(config_in);
      const auto cert = is_nash(cfg, gopt);
      print(nash_json(cert));
      return 0;
    }
    if (*strong) {
      const auto cfg = load_config(config_in);
      StrongNashOptions so;
      so.max_coalition = coalition_cap;
      so.feasibility = gopt;
      print(strong_nash_json(is_strong_nash(cfg, so)));
      return 0;
    }
    if (*dynamics) {
      const auto cfg = load_config(config_in);
      const auto res = best_response_dynamics(cfg, parse_policy(policy), max_steps, gopt, dyn_seed_set ? dyn_seed : g.seed);
      const auto cert = is_nash(res.final, gopt);
      Json moves = Json::array();
      for (const auto& mv : res.trace) moves.push_back(move_json(mv));
      Json j{{"policy", policy},
             {"steps", res.steps},
             {"converged", res.converged},
             {"status", res.converged ? "converged" : "step budget exhausted"},
             {"bins_before", social_cost(cfg)},
             {"bins_after", social_cost(res.final)},
             {"final_nash", cert.nash},
             {"prop2", prop2_json(prop2_check(res.final, cert.nash))},
             {"trace", moves},
             {"final", config_json(res.final)}};
      emit(out_path(g, game_out, "dynamics.json"), j, make_manifest(g, {config_in}));
      j.erase("final");
      j.erase("trace");
      print(j);
      return 0;
    }
    if (*poa || *spoa) {
      const auto U = packing_from_json(read_json_file(packing_in));
      PoaOptions po;
      po.item_cap = item_cap;
      po.feasibility = gopt;
      po.coalition_cap = coalition_cap;
      const auto inst = *poa ? poa_instance(U, po) : spoa_instance(U, po);
      Json j = poa_json(inst);
      j["P_prime"] = config_json(inst.P_prime);
      emit(out_path(g, game_out, *poa ? "poa.json" : "spoa.json"), j, make_manifest(g, {packing_in}));
      j.erase("P_prime");
      print(j);
      const bool certified = inst.nash && inst.nash->nash && (!*spoa || (inst.strong && inst.strong->strong_nash));
      return certified ? 0 : 1;
    }
    if (*prop1) {
      const auto s = prop1_sweep(kmax, dmax);
      Json j{{"checked", s.checked}, {"failures", s.failures}};
      j["first_failure"] = s.first_failure ? Json::array({std::get<0>(*s.first_failure), std::get<1>(*s.first_failure),
                                                          std::get<2>(*s.first_failure)})
                                           : Json(nullptr);
      print(j);
      return s.failures == 0 ? 0 : 1;
    }
    if (*repro) {
      ReproduceOptions ro;
      ro.dims = parse_dims(dims);
      ro.seed = g.seed;
      ro.log_base = base;
      ro.M = M;
      ro.online_item_cap = online_cap;
      ro.game_item_cap = game_cap;
      ro.coalition_cap = coalition_cap;
      ro.command = g.command;
      if (g.record_time) ro.timestamp = now_utc();
      const auto res = reproduce(ro, g.out_dir);
      Json rows = Json::array();
      for (const auto& r : res.rows) rows.push_back(summary_row_json(r));
      Json failures = Json::array();
      for (const auto& f : res.failures) failures.push_back(Json{{"d", f.d}, {"stage", f.stage}, {"error", f.error}});
      print(Json{{"rows", rows}, {"failures", failures}, {"files", res.files.size()}});
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 2;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
