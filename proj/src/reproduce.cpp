#include "hcpack/reproduce.hpp"

#include <functional>
#include <sstream>

#include "hcpack/errors.hpp"
#include "hcpack/game.hpp"
#include "hcpack/online.hpp"

namespace hcp {

namespace {

BigInt smallest_scale(const TypedPacking& U, int M) {
  BigInt l = 1;
  for (int k : U.classes()) {
    const BigInt p = ipow(k - 1, static_cast<unsigned>(U.d));
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), p.get_mpz_t());
  }
  return BigInt(2L * M) * l;
}

BigInt instance_items(const TypedPacking& U, const BigInt& C) {
  return C * BigInt(static_cast<unsigned long>(U.bin.cubes.size()));
}

std::string opt_str(const std::optional<Rat>& r) { return r ? r->str() : ""; }
std::string opt_str(const std::optional<BigInt>& r) { return r ? big_str(*r) : ""; }

}  // namespace

Json summary_row_json(const SummaryRow& r) {
  Json sizes = Json::object();
  for (const auto& [k, n] : r.language_sizes) sizes[std::to_string(k)] = big_str(n);
  auto opt_rat = [](const std::optional<Rat>& x) { return x ? rat_json(*x) : Json(nullptr); };
  auto opt_big = [](const std::optional<BigInt>& x) { return x ? Json(big_str(*x)) : Json(nullptr); };
  return Json{{"d", r.d},
              {"S", r.S},
              {"S_prime", r.S_prime},
              {"epsilon", rat_json(r.epsilon)},
              {"family", r.family},
              {"language_sizes", sizes},
              {"weight", rat_json(r.weight)},
              {"target_met", r.target_met},
              {"certified_lower_bound", opt_big(r.lower_bound)},
              {"measured_bins", r.measured_bins ? Json(*r.measured_bins) : Json(nullptr)},
              {"offline_bins", opt_big(r.offline_bins)},
              {"poa_ratio", opt_rat(r.poa_ratio)},
              {"poa_nash", r.poa_nash ? Json(*r.poa_nash) : Json(nullptr)},
              {"spoa_ratio", opt_rat(r.spoa_ratio)},
              {"spoa_strong_nash", r.spoa_strong ? Json(*r.spoa_strong) : Json(nullptr)}};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream o;
  o << "d,S,S_prime,epsilon,family,language_sizes,weight,target_met,certified_lower_bound,measured_bins,"
       "offline_bins,poa_ratio,spoa_ratio\n";
  for (const auto& r : rows) {
    std::string sizes;
    for (const auto& [k, n] : r.language_sizes) {
      if (!sizes.empty()) sizes += ';';
      sizes += std::to_string(k) + ":" + big_str(n);
    }
    o << r.d << ',' << r.S << ',' << r.S_prime << ',' << r.epsilon.str() << ',' << r.family << ',' << sizes << ','
      << r.weight.str() << ',' << (r.target_met ? "true" : "false") << ',' << opt_str(r.lower_bound) << ','
      << (r.measured_bins ? std::to_string(*r.measured_bins) : "") << ',' << opt_str(r.offline_bins) << ','
      << opt_str(r.poa_ratio) << ',' << opt_str(r.spoa_ratio) << '\n';
  }
  return o.str();
}

ReproduceResult reproduce(const ReproduceOptions& opt, const std::filesystem::path& out_dir) {
  ReproduceResult res;
  RunManifest manifest;
  manifest.command = opt.command;
  manifest.seed = opt.seed;
  manifest.log_base = opt.log_base;
  manifest.timestamp = opt.timestamp;
  const Json mjson = manifest_json(manifest);

  auto emit = [&](const std::string& name, Json j) {
    j["manifest"] = mjson;
    const std::string text = dump(j);
    write_text_file(out_dir / name, text);
    res.files[name] = sha256_hex(text);
  };

  for (int d : opt.dims) {
    SummaryRow row;
    row.d = d;
    auto stage = [&](const std::string& name, const std::function<void()>& body) {
      try {
        body();
        return true;
      } catch (const std::exception& e) {
        res.failures.push_back({d, name, e.what()});
        return false;
      }
    };
    const std::string tag = "d" + std::to_string(d);
    DriverOptions dopt;
    dopt.log_base = opt.log_base;
    dopt.seed = opt.seed;

    std::optional<DriverReport> A;
    std::optional<DriverReport> B;
    stage("lemma-A", [&] {
      A = lemma_A_driver(d, dopt);
      row.S = A->S;
      row.epsilon = A->epsilon;
      row.family = A->family_label;
      row.language_sizes = A->language_sizes;
      row.weight = A->family_weight;
      row.target_met = A->target_met;
      emit("lemmaA_" + tag + ".json", driver_json(*A));
      emit("family_A_" + tag + ".json", family_json(A->family));
      emit("packing_A_" + tag + ".json", packing_json(A->packing));
    });
    stage("lemma-B", [&] {
      B = lemma_B_driver(d, dopt);
      row.S_prime = B->S;
      emit("lemmaB_" + tag + ".json", driver_json(*B));
      emit("family_B_" + tag + ".json", family_json(B->family));
      emit("packing_B_" + tag + ".json", packing_json(B->packing));
    });

    if (A) {
      const TypedPacking& U = A->packing;
      stage("adversary", [&] {
        BigInt C = full_scale(U, opt.M);
        bool faithful = true;
        const BigInt cap = static_cast<unsigned long>(opt.online_item_cap);
        if (instance_items(U, C) > cap) {
          C = smallest_scale(U, opt.M);
          faithful = false;
        }
        if (instance_items(U, C) > cap)
          throw BudgetExceeded("adversarial instance has " + big_str(instance_items(U, C)) + " items, above the cap");
        AdversaryOptions ao;
        ao.scale = C;
        const auto inst = adversarial_instance(U, opt.M, ao);
        const auto lb = lower_bound_certificate(U, opt.M, C);
        const auto offline = offline_certificate(U, inst, C);
        if (!offline.ok()) throw VerificationError("offline certificate failed");
        auto alg = make_class_harmonic(opt.M);
        const auto run = run_bounded_space(*alg, inst, opt.M);
        const auto ratio = ratio_report(run, offline, lb);
        if (BigInt(static_cast<unsigned long>(run.bins_used)) < lb.total)
          throw VerificationError("algorithm used fewer bins than the certified lower bound");
        row.lower_bound = lb.total;
        row.measured_bins = run.bins_used;
        row.offline_bins = offline.bins;
        Json j{{"scale", big_str(C)},
               {"full_scale", faithful},
               {"N", big_str(adversary_N(U))},
               {"instance", instance_json(inst)},
               {"lower_bound", lower_bound_json(lb)},
               {"offline_bins", big_str(offline.bins)},
               {"run", run_json(run, ratio)}};
        emit("adversary_" + tag + ".json", j);
        emit("instance_" + tag + ".json", instance_json(inst));
      });
      stage("poa", [&] {
        PoaOptions po;
        po.item_cap = opt.game_item_cap;
        auto poa = poa_instance(U, po);
        row.poa_ratio = poa.ratio;
        row.poa_nash = poa.nash && poa.nash->nash;
        emit("poa_" + tag + ".json", poa_json(poa));
        if (poa.P_prime.items.size() <= opt.config_file_cap) emit("config_poa_" + tag + ".json", config_json(poa.P_prime));
      });
    }
    if (B) {
      stage("spoa", [&] {
        PoaOptions po;
        po.item_cap = opt.game_item_cap;
        po.coalition_cap = opt.coalition_cap;
        auto sp = spoa_instance(B->packing, po);
        row.spoa_ratio = sp.ratio;
        row.spoa_strong = sp.strong && sp.strong->strong_nash;
        emit("spoa_" + tag + ".json", poa_json(sp));
        if (sp.P_prime.items.size() <= opt.config_file_cap) emit("config_spoa_" + tag + ".json", config_json(sp.P_prime));
      });
    }
    res.rows.push_back(std::move(row));
  }

  Json rows = Json::array();
  for (const auto& r : res.rows) rows.push_back(summary_row_json(r));
  Json failures = Json::array();
  for (const auto& f : res.failures) failures.push_back(Json{{"d", f.d}, {"stage", f.stage}, {"error", f.error}});
  emit("summary.json", Json{{"rows", rows}, {"failures", failures}});
  const std::string csv = summary_csv(res.rows);
  write_text_file(out_dir / "summary.csv", csv);
  res.files["summary.csv"] = sha256_hex(csv);

  Json files = Json::object();
  for (const auto& [name, hash] : res.files) files[name] = hash;
  write_text_file(out_dir / "manifest.json", dump(Json{{"manifest", mjson}, {"files", files}}));
  return res;
}

}  // namespace hcp
