#include "hcpack/serialize.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "hcpack/errors.hpp"

namespace hcp {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

int int_field(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) throw InputError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::vector<int> ints(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of integers");
  std::vector<int> out;
  for (const auto& x : j) {
    if (!x.is_number_integer()) throw InputError("expected an integer");
    out.push_back(x.get<int>());
  }
  return out;
}

Json big_json(const BigInt& n) { return big_str(n); }

}  // namespace

Json rat_json(const Rat& r) { return r.str(); }

Rat rat_from_json(const Json& j) {
  try {
    if (j.is_string()) return Rat::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad rational: ") + e.what());
  }
  throw InputError("rational must be a string \"p/q\" or an integer, got " + j.dump());
}

Json rats_json(const std::vector<Rat>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(rat_json(x));
  return a;
}

std::vector<Rat> rats_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of rationals");
  std::vector<Rat> out;
  for (const auto& x : j) out.push_back(rat_from_json(x));
  return out;
}

BigInt big_from_json(const Json& j) {
  try {
    if (j.is_string()) return parse_big(j.get<std::string>());
    if (j.is_number_integer()) return BigInt(j.get<long>());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad integer: ") + e.what());
  }
  throw InputError("integer must be a string or a number, got " + j.dump());
}

namespace {

Json cube_json(const PlacedCube& c) {
  return Json{{"k", c.cls.k()}, {"epsilon", rat_json(c.cls.epsilon())}, {"base", rats_json(c.base)}};
}

PlacedCube cube_from_json(const Json& j, int d) {
  const int k = int_field(j, "k");
  CubeClass cls(k, rat_from_json(field(j, "epsilon")), d);
  auto base = rats_from_json(field(j, "base"));
  if (base.size() != static_cast<std::size_t>(d))
    throw InputError("cube base has " + std::to_string(base.size()) + " coordinates, d = " + std::to_string(d));
  return PlacedCube(std::move(cls), std::move(base));
}

}  // namespace

Json bin_json(const Bin& b) {
  Json cubes = Json::array();
  for (const auto& c : b.cubes) cubes.push_back(cube_json(c));
  return Json{{"d", b.d}, {"cubes", cubes}};
}

Bin bin_from_json(const Json& j) {
  const int d = int_field(j, "d");
  if (d < 1) throw InputError("d must be at least 1");
  Bin b(d);
  const auto& cubes = field(j, "cubes");
  if (!cubes.is_array()) throw InputError("'cubes' must be an array");
  for (const auto& c : cubes) b.cubes.push_back(cube_from_json(c, d));
  return b;
}

Json packing_json(const TypedPacking& p) {
  Json j = bin_json(p.bin);
  j["epsilon"] = rat_json(p.epsilon);
  Json nu = Json::object();
  for (const auto& [k, n] : p.nu) nu[std::to_string(k)] = n;
  j["nu"] = nu;
  j["weight"] = rat_json(p.weight);
  if (p.family_weight) j["family_weight"] = rat_json(*p.family_weight);
  return j;
}

TypedPacking packing_from_json(const Json& j) {
  auto t = make_typed_packing(bin_from_json(j));
  if (t.bin.cubes.empty() && j.contains("epsilon")) t.epsilon = rat_from_json(j.at("epsilon"));
  if (j.contains("family_weight")) t.family_weight = rat_from_json(j.at("family_weight"));
  return t;
}

Json family_json(const SeparatedFamily& f) {
  Json j;
  j["d"] = f.d;
  j["kind"] = f.kind == FamilyKind::warmup ? "warmup" : "randomized";
  j["classes"] = f.classes;
  j["seed"] = f.seed;
  j["rng"] = f.rng;
  if (f.fsets) {
    const auto& s = *f.fsets;
    j["fsets"] = Json{{"sets", s.sets},
                      {"threshold", rat_json(s.threshold)},
                      {"draws", s.draws},
                      {"rejections", s.rejections},
                      {"restarts", s.restarts},
                      {"max_intersection", s.max_intersection}};
  } else {
    j["fsets"] = nullptr;
  }
  Json langs = Json::array();
  for (const auto& L : f.languages) {
    Json l{{"k", L.k()}, {"F", L.core_coords()}, {"size", big_json(L.size())}, {"core_count", big_json(L.core_count())}};
    if (L.materialized()) {
      l["core_words"] = L.core_words();
    } else {
      l["avoid_sets"] = L.avoid_sets();
      l["core_predicate_seed"] = f.seed;
    }
    langs.push_back(l);
  }
  j["languages"] = langs;
  return j;
}

SeparatedFamily family_from_json(const Json& j) {
  SeparatedFamily f;
  f.d = int_field(j, "d");
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "warmup") {
    f.kind = FamilyKind::warmup;
  } else if (kind == "randomized") {
    f.kind = FamilyKind::randomized;
  } else {
    throw InputError("unknown family kind '" + kind + "'");
  }
  f.classes = ints(field(j, "classes"));
  f.seed = field(j, "seed").get<std::uint64_t>();
  if (j.contains("rng")) f.rng = j.at("rng").get<std::string>();
  if (j.contains("fsets") && !j.at("fsets").is_null()) {
    const auto& s = j.at("fsets");
    FSets fs;
    fs.d = f.d;
    for (const auto& set : field(s, "sets")) fs.sets.push_back(ints(set));
    fs.threshold = rat_from_json(field(s, "threshold"));
    fs.draws = field(s, "draws").get<std::size_t>();
    fs.rejections = field(s, "rejections").get<std::size_t>();
    fs.restarts = field(s, "restarts").get<std::size_t>();
    fs.max_intersection = field(s, "max_intersection").get<int>();
    f.fsets = std::move(fs);
  }
  for (const auto& l : field(j, "languages")) {
    const int k = int_field(l, "k");
    auto F = ints(field(l, "F"));
    if (l.contains("core_words")) {
      std::vector<CoreWord> words;
      for (const auto& w : l.at("core_words")) words.push_back(ints(w));
      f.languages.push_back(Language::product(k, f.d, std::move(F), std::move(words)));
    } else {
      std::vector<std::vector<int>> avoid;
      for (const auto& a : field(l, "avoid_sets")) avoid.push_back(ints(a));
      f.languages.push_back(Language::implicit(k, f.d, std::move(F), std::move(avoid), big_from_json(field(l, "core_count"))));
    }
  }
  if (f.languages.size() != f.classes.size()) throw InputError("family lists a different number of languages and classes");
  for (std::size_t i = 0; i < f.classes.size(); ++i)
    if (f.languages[i].k() != f.classes[i]) throw InputError("language order does not match the class list");
  return f;
}

Json instance_json(const Instance& inst) {
  Json segs = Json::array();
  for (const auto& s : inst.segments) segs.push_back(Json{{"k", s.k}, {"count", s.count}});
  return Json{{"d", inst.d}, {"epsilon", rat_json(inst.epsilon)}, {"segments", segs}, {"items", inst.size()}};
}

Instance instance_from_json(const Json& j) {
  Instance inst;
  inst.d = int_field(j, "d");
  inst.epsilon = rat_from_json(field(j, "epsilon"));
  for (const auto& s : field(j, "segments")) {
    const auto& c = field(s, "count");
    if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<long>() >= 0))
      throw InputError("segment count must be a nonnegative integer");
    inst.segments.push_back({int_field(s, "k"), c.get<std::size_t>()});
  }
  validate_instance(inst);
  return inst;
}

Json config_json(const GameConfig& cfg) {
  Json bins = Json::array();
  for (auto b : cfg.bin_ids()) {
    Json cubes = Json::array();
    for (auto i : cfg.members(b)) {
      Json c = cube_json(cfg.items[i].cube);
      c["id"] = cfg.items[i].id;
      cubes.push_back(c);
    }
    bins.push_back(Json{{"id", b}, {"cubes", cubes}});
  }
  return Json{{"d", cfg.d}, {"bins", bins}};
}

GameConfig config_from_json(const Json& j) {
  GameConfig cfg;
  cfg.d = int_field(j, "d");
  if (cfg.d < 1) throw InputError("d must be at least 1");
  std::size_t next_id = 0;
  for (const auto& b : field(j, "bins")) {
    const auto id = field(b, "id").get<std::size_t>();
    for (const auto& c : field(b, "cubes")) {
      const auto item = c.contains("id") ? c.at("id").get<std::size_t>() : next_id;
      next_id = std::max(next_id, item + 1);
      cfg.items.push_back(GameItem{item, id, cube_from_json(c, cfg.d)});
    }
  }
  validate_config(cfg);
  return cfg;
}

namespace {

Json word_json(const Word& w) { return Json{{"k", w.k}, {"letters", w.letters}}; }

}  // namespace

Json certificate_json(const FamilyCertificate& c) {
  Json gapped = Json::array();
  for (const auto& g : c.gapped) {
    Json x{{"gapped", g.gapped}};
    x["failing_coordinate"] = g.failing_coordinate ? Json(*g.failing_coordinate) : Json(nullptr);
    gapped.push_back(x);
  }
  Json pairs = Json::array();
  for (const auto& p : c.pairs) {
    Json x{{"lower", p.lower},
           {"upper", p.upper},
           {"separated", p.result.separated},
           {"exhaustive", p.result.exhaustive},
           {"pairs_checked", p.result.pairs_checked}};
    if (p.result.witness) x["witness"] = Json::array({word_json(p.result.witness->first), word_json(p.result.witness->second)});
    pairs.push_back(x);
  }
  return Json{{"ok", c.ok}, {"exhaustive", c.exhaustive}, {"gapped", gapped}, {"pairs", pairs}};
}

Json driver_json(const DriverReport& r) {
  Json j;
  j["lemma"] = r.lemma;
  j["d"] = r.d;
  j["log_base"] = to_string(r.log_base);
  j[r.lemma == "A" ? "S" : "S_prime"] = r.S;
  j["epsilon"] = rat_json(r.epsilon);
  j["family_label"] = r.family_label;
  j["fallback_reason"] = r.fallback_reason ? Json(*r.fallback_reason) : Json(nullptr);
  j["classes"] = r.family.classes;
  j["certificate"] = certificate_json(r.certificate);
  j["cubes_materialized"] = r.packing.bin.cubes.size();
  j["fully_materialized"] = r.fully_materialized;
  Json sizes = Json::object();
  for (const auto& [k, n] : r.language_sizes) sizes[std::to_string(k)] = big_json(n);
  j["language_sizes"] = sizes;
  j["family_weight"] = rat_json(r.family_weight);
  j["packing_weight"] = rat_json(r.packing.weight);
  j["recomputed_weight"] = rat_json(r.recomputed_weight);
  j["target"] = r.target;
  j["target_met"] = r.target_met;
  j["density_target"] = r.density_target ? rat_json(*r.density_target) : Json(nullptr);
  j["density_met"] = r.density_met;
  j["asserted"] = r.asserted;
  Json bad = Json::object();
  for (const auto& [k, f] : r.bad_fraction) bad[std::to_string(k)] = rat_json(f);
  j["bad_fraction"] = bad;
  return j;
}

Json lower_bound_json(const LowerBound& lb) {
  Json segs = Json::array();
  for (const auto& s : lb.segments)
    segs.push_back(Json{{"k", s.k},
                        {"items", big_json(s.items)},
                        {"min_bins", big_json(s.min_bins)},
                        {"min_new_bins", big_json(s.min_new_bins)},
                        {"counted", big_json(s.counted)}});
  return Json{{"total", big_json(lb.total)}, {"segments", segs}};
}

Json run_json(const RunResult& r, const RatioReport& ratio) {
  Json j{{"algorithm", r.algorithm},
         {"M", r.M},
         {"bins_used", r.bins_used},
         {"max_open", r.max_open},
         {"segment_new_bins", r.segment_new_bins},
         {"opt_upper_bound", big_json(ratio.opt_upper_bound)},
         {"certified_lower_bound", big_json(ratio.certified_lower_bound)},
         {"ratio", rat_json(ratio.ratio)}};
  if (!r.trace.empty()) {
    Json t = Json::array();
    for (const auto& p : r.trace) t.push_back(Json{{"item", p.item}, {"bin", p.bin}, {"base", rats_json(p.base)}});
    j["trace"] = t;
  }
  return j;
}

Json move_json(const MoveProposal& m) {
  Json j{{"item", m.item},
         {"from", m.from},
         {"to", m.to},
         {"base", rats_json(m.base)},
         {"cost_before", rat_json(m.cost_before)},
         {"cost_after", rat_json(m.cost_after)},
         {"mode", to_string(m.mode)}};
  if (!m.relayout.empty()) {
    Json r = Json::array();
    for (const auto& [id, base] : m.relayout) r.push_back(Json{{"item", id}, {"base", rats_json(base)}});
    j["relayout"] = r;
  }
  return j;
}

Json nash_json(const NashCertificate& c) {
  Json moves = Json::array();
  for (const auto& m : c.improving) moves.push_back(move_json(m));
  return Json{{"nash", c.nash},
              {"mode", to_string(c.mode)},
              {"moves_checked", c.moves_checked},
              {"volume_candidates", c.volume_candidates},
              {"improving_moves", moves},
              {"note", c.note}};
}

Json coalition_json(const Coalition& c) {
  Json members = Json::array();
  for (const auto& m : c.members)
    members.push_back(Json{{"item", m.item},
                           {"from", m.from},
                           {"to", m.to},
                           {"new_bin", m.new_bin},
                           {"base", rats_json(m.base)},
                           {"cost_before", rat_json(m.cost_before)},
                           {"cost_after", rat_json(m.cost_after)}});
  Json j{{"members", members}};
  if (!c.relayout.empty()) {
    Json r = Json::array();
    for (const auto& [id, base] : c.relayout) r.push_back(Json{{"item", id}, {"base", rats_json(base)}});
    j["relayout"] = r;
  }
  return j;
}

Json strong_nash_json(const StrongNashCertificate& c) {
  return Json{{"strong_nash", c.strong_nash},
              {"max_coalition", c.max_coalition},
              {"mode", to_string(c.mode)},
              {"type_coalitions", c.type_coalitions},
              {"volume_passed", c.volume_passed},
              {"geometric_checks", c.geometric_checks},
              {"witness", c.witness ? coalition_json(*c.witness) : Json(nullptr)},
              {"note", c.note}};
}

Json poa_json(const PoaInstance& p) {
  Json j{{"N", big_json(p.N)},
         {"scaled", p.scaled},
         {"P_bins", p.P_bins},
         {"P_prime_bins", p.P_prime_bins},
         {"ratio", rat_json(p.ratio)},
         {"weight", rat_json(p.weight)},
         {"ratio_equals_weight", p.ratio == p.weight}};
  if (p.nash) {
    Json n = nash_json(*p.nash);
    n.erase("improving_moves");
    n["improving_count"] = p.nash->improving.size();
    j["nash"] = n;
  }
  if (p.strong) j["strong_nash"] = strong_nash_json(*p.strong);
  return j;
}

Json prop2_json(const Prop2Report& r) {
  return Json{{"conditioned", r.conditioned},
              {"bins", r.bins},
              {"low_bins", r.low_bins},
              {"total_volume", rat_json(r.total_volume)},
              {"bin_bound", rat_json(r.bin_bound)},
              {"within_bound", r.within_bound},
              {"ok", r.ok}};
}

Json manifest_json(const RunManifest& m) {
  Json inputs = Json::object();
  for (const auto& [path, hash] : m.inputs) inputs[path] = hash;
  return Json{{"tool", "hcpack"},
              {"version", std::string(kToolVersion)},
              {"command", m.command},
              {"seed", m.seed},
              {"log_base", to_string(m.log_base)},
              {"rng", std::string(kRngName)},
              {"timestamp", m.timestamp ? Json(*m.timestamp) : Json(nullptr)},
              {"inputs", inputs}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream o;
  for (unsigned i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return o.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace hcp
