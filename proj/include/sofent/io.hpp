#pragma once

// JSON encodings of the domain objects plus the compact binary format for
// sofic approximations (magic "SOFA", little-endian u32 permutation arrays).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sofent/group.hpp"
#include "sofent/microstates.hpp"
#include "sofent/quasitiling.hpp"
#include "sofent/sofic.hpp"
#include "sofent/subshift.hpp"

namespace sofent {

using json = nlohmann::ordered_json;

inline json group_to_json(const Group& g) {
    switch (g.kind) {
        case GroupKind::Z: return json{{"group", "Z"}};
        case GroupKind::Z2: return json{{"group", "Z2"}};
        case GroupKind::Zmod: return json{{"group", {{"Zmod", g.modulus}}}};
    }
    throw std::logic_error("group_to_json: unreachable");
}

inline Group group_from_json(const json& j) {
    if (!j.contains("group")) throw std::invalid_argument("config: missing \"group\"");
    const auto& g = j.at("group");
    if (g.is_string()) {
        std::string s = g.get<std::string>();
        if (s == "Z") return group_z();
        if (s == "Z2") return group_z2();
        throw std::invalid_argument("config: unknown group \"" + s + "\"");
    }
    if (g.is_object() && g.contains("Zmod")) return group_zmod(g.at("Zmod").get<std::int64_t>());
    throw std::invalid_argument("config: malformed group descriptor");
}

inline json subset_to_json(const FiniteSubset& f) {
    json arr = json::array();
    for (const auto& e : f.elems) {
        if (f.group.rank() == 1)
            arr.push_back(e.c[0]);
        else
            arr.push_back(json::array({e.c[0], e.c[1]}));
    }
    return arr;
}

inline FiniteSubset subset_from_json(const Group& g, const json& arr) {
    std::vector<GroupElement> es;
    for (const auto& item : arr) {
        if (item.is_array())
            es.push_back(make_element(g, item.at(0).get<std::int64_t>(),
                                      item.size() > 1 ? item.at(1).get<std::int64_t>() : 0));
        else
            es.push_back(make_element(g, item.get<std::int64_t>()));
    }
    return FiniteSubset(g, std::move(es));
}

inline json sofic_to_json(const SoficApproximation& s) {
    json j;
    j["artifact"] = "sofic";
    j["group"] = group_to_json(s.group)["group"];
    j["d"] = s.d;
    j["label"] = s.label;
    j["support"] = subset_to_json(s.support);
    json perms = json::array();
    for (const auto& p : s.perms) perms.push_back(p);
    j["perms"] = perms;
    return j;
}

inline SoficApproximation sofic_from_json(const json& j) {
    SoficApproximation s;
    s.group = group_from_json(json{{"group", j.at("group")}});
    s.d = j.at("d").get<std::uint64_t>();
    s.label = j.value("label", std::string{});
    s.support = subset_from_json(s.group, j.at("support"));
    for (const auto& p : j.at("perms")) s.perms.push_back(p.get<Perm>());
    if (s.perms.size() != s.support.size())
        throw std::invalid_argument("sofic artifact: permutation count differs from support");
    s.finalize();
    return s;
}

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_i64(std::string& out, std::int64_t v) {
    put_u64(out, static_cast<std::uint64_t>(v));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;
    std::uint8_t u8() {
        if (pos >= buf.size()) throw std::invalid_argument("binary artifact: truncated");
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16() { return std::uint16_t(u8()) | std::uint16_t(u8()) << 8; }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
};

}  // namespace detail

inline std::string sofic_to_binary(const SoficApproximation& s) {
    std::string out;
    out += "SOFA";
    detail::put_u16(out, 1);  // version
    out.push_back(char(s.group.kind == GroupKind::Z ? 0 : s.group.kind == GroupKind::Z2 ? 1 : 2));
    detail::put_i64(out, s.group.modulus);
    detail::put_u64(out, s.d);
    detail::put_u32(out, static_cast<std::uint32_t>(s.label.size()));
    out += s.label;
    detail::put_u32(out, static_cast<std::uint32_t>(s.support.size()));
    for (const auto& e : s.support.elems) {
        detail::put_i64(out, e.c[0]);
        detail::put_i64(out, e.c[1]);
    }
    for (const auto& p : s.perms)
        for (auto v : p) detail::put_u32(out, v);
    return out;
}

inline SoficApproximation sofic_from_binary(const std::string& buf) {
    if (buf.size() < 6 || buf.compare(0, 4, "SOFA") != 0)
        throw std::invalid_argument("binary artifact: bad magic");
    detail::ByteReader r{buf, 4};
    std::uint16_t version = r.u16();
    if (version != 1) throw std::invalid_argument("binary artifact: unsupported version");
    std::uint8_t kind = r.u8();
    std::int64_t modulus = r.i64();
    SoficApproximation s;
    s.group = kind == 0 ? group_z() : kind == 1 ? group_z2() : group_zmod(modulus);
    s.d = r.u64();
    std::uint32_t label_len = r.u32();
    for (std::uint32_t i = 0; i < label_len; ++i) s.label.push_back(char(r.u8()));
    std::uint32_t nsupp = r.u32();
    std::vector<GroupElement> es;
    for (std::uint32_t i = 0; i < nsupp; ++i) {
        std::int64_t x = r.i64();
        std::int64_t y = r.i64();
        es.push_back(make_element(s.group, x, y));
    }
    s.support = FiniteSubset(s.group, std::move(es));
    if (s.support.size() != nsupp)
        throw std::invalid_argument("binary artifact: duplicate support elements");
    for (std::uint32_t i = 0; i < nsupp; ++i) {
        Perm p(s.d);
        for (std::uint64_t a = 0; a < s.d; ++a) p[a] = r.u32();
        s.perms.push_back(std::move(p));
    }
    if (r.pos != buf.size()) throw std::invalid_argument("binary artifact: trailing bytes");
    s.finalize();
    return s;
}

inline json subshift_to_json(const Subshift& x) {
    json j;
    j["alphabet"] = x.alphabet;
    j["kind"] = x.kind == ShiftKind::Full ? "full" : "sft";
    if (x.kind == ShiftKind::Sft) {
        j["transitions"] = x.transitions_h;
        if (x.group.kind == GroupKind::Z2) j["transitions_v"] = x.transitions_v;
    }
    return j;
}

inline Subshift subshift_from_json(const Group& g, const json& j) {
    int k = j.at("alphabet").get<int>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "full") return full_shift(g, k);
    if (kind != "sft") throw std::invalid_argument("config: subshift kind must be full or sft");
    auto th = j.at("transitions").get<std::vector<std::vector<std::uint8_t>>>();
    std::vector<std::vector<std::uint8_t>> tv;
    if (j.contains("transitions_v")) tv = j.at("transitions_v").get<std::vector<std::vector<std::uint8_t>>>();
    return sft_shift(g, k, std::move(th), std::move(tv));
}

inline json measure_to_json(const MeasureModel& m) {
    if (m.kind == MeasureKind::Bernoulli) return json{{"bernoulli", m.weights}};
    return json{{"markov", {{"P", m.P}, {"pi", m.pi}}}};
}

inline MeasureModel measure_from_json(const json& j) {
    if (j.contains("bernoulli")) return bernoulli_measure(j.at("bernoulli").get<std::vector<double>>());
    if (j.contains("markov"))
        return markov_measure(j.at("markov").at("P").get<std::vector<std::vector<double>>>(),
                              j.at("markov").at("pi").get<std::vector<double>>());
    throw std::invalid_argument("config: measure must be bernoulli or markov");
}

inline json quasitiling_to_json(const Quasitiling& qt, const SoficApproximation& sig) {
    json j;
    j["artifact"] = "quasitiling";
    j["group"] = group_to_json(qt.group)["group"];
    j["d"] = qt.d;
    j["tau"] = qt.tau;
    j["eta"] = qt.eta;
    json shapes = json::array();
    for (const auto& s : qt.shapes) shapes.push_back(subset_to_json(s));
    j["shapes"] = shapes;
    j["centers"] = qt.centers;
    j["hats"] = qt.hats;
    if (qt.has_cores()) j["cores"] = qt.cores;
    j["coverage"] = qt.coverage;
    j["sigma"] = sofic_to_json(sig);
    return j;
}

inline std::pair<Quasitiling, SoficApproximation> quasitiling_from_json(const json& j) {
    Quasitiling qt;
    qt.group = group_from_json(json{{"group", j.at("group")}});
    qt.d = j.at("d").get<std::uint64_t>();
    qt.tau = j.at("tau").get<double>();
    qt.eta = j.at("eta").get<double>();
    for (const auto& s : j.at("shapes")) qt.shapes.push_back(subset_from_json(qt.group, s));
    qt.centers = j.at("centers").get<std::vector<std::vector<std::uint32_t>>>();
    qt.hats = j.at("hats").get<std::vector<std::vector<std::vector<std::uint32_t>>>>();
    if (j.contains("cores"))
        qt.cores = j.at("cores").get<std::vector<std::vector<std::vector<std::uint32_t>>>>();
    qt.coverage = j.at("coverage").get<double>();
    if (qt.centers.size() != qt.shapes.size() || qt.hats.size() != qt.shapes.size())
        throw std::invalid_argument("quasitiling artifact: ragged stage arrays");
    SoficApproximation sig = sofic_from_json(j.at("sigma"));
    if (sig.d != qt.d) throw std::invalid_argument("quasitiling artifact: model size mismatch");
    return {std::move(qt), std::move(sig)};
}

inline json pattern_to_json(const Pattern& p) {
    json j;
    j["shape"] = subset_to_json(p.shape);
    j["labels"] = p.labels;
    return j;
}

inline Pattern pattern_from_json(const Group& g, const json& j) {
    return Pattern(subset_from_json(g, j.at("shape")), j.at("labels").get<std::vector<symbol_t>>());
}

// A microstate space spec with its model embedded; the pair owns the
// approximation the spec points at.
struct OwnedSpaceSpec {
    SoficApproximation sigma;
    MicrostateSpaceSpec spec;
};

inline json space_spec_to_json(const MicrostateSpaceSpec& spec) {
    json j;
    j["artifact"] = "microstate_spec";
    j["group"] = group_to_json(spec.shift.group)["group"];
    j["sigma"] = sofic_to_json(*spec.sigma);
    j["subshift"] = subshift_to_json(spec.shift);
    j["window"] = subset_to_json(spec.window);
    j["delta_equiv"] = spec.delta_equiv;
    j["delta_adm"] = spec.delta_adm;
    if (spec.measure) {
        j["measure"] = measure_to_json(*spec.measure);
        j["delta_meas"] = spec.delta_meas;
        json pats = json::array();
        for (const auto& p : spec.test_patterns) pats.push_back(pattern_to_json(p));
        j["patterns"] = pats;
    }
    return j;
}

inline std::unique_ptr<OwnedSpaceSpec> space_spec_from_json(const json& j) {
    auto owned = std::make_unique<OwnedSpaceSpec>();
    owned->sigma = sofic_from_json(j.at("sigma"));
    Group g = owned->sigma.group;
    Subshift shift = subshift_from_json(g, j.at("subshift"));
    FiniteSubset window = subset_from_json(g, j.at("window"));
    std::optional<MeasureModel> measure;
    std::vector<Pattern> patterns;
    double delta_meas = 0.0;
    if (j.contains("measure")) {
        measure = measure_from_json(j.at("measure"));
        delta_meas = j.at("delta_meas").get<double>();
        if (j.contains("patterns"))
            for (const auto& p : j.at("patterns")) patterns.push_back(pattern_from_json(g, p));
    }
    owned->spec = make_space_spec(owned->sigma, std::move(shift), std::move(window),
                                  j.value("delta_equiv", 0.0), j.value("delta_adm", 0.0),
                                  std::move(measure), std::move(patterns), delta_meas);
    return owned;
}

// One member per line; symbols joined bare for alphabets up to ten letters,
// comma-separated beyond.
inline std::string microstate_line(const Microstate& m, int alphabet) {
    std::string out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (alphabet > 10 && i) out += ',';
        out += std::to_string(int(m[i]));
    }
    return out;
}

inline json separation_report_to_json(const SeparationReport& rep) {
    json j;
    j["metric"] = metric_name(rep.metric);
    j["epsilon"] = rep.epsilon;
    if (rep.exact_count) j["exact_count"] = *rep.exact_count;
    j["greedy_lower"] = rep.greedy_lower;
    j["spanning_upper"] = rep.spanning_upper;
    j["log_count"] = rep.log_count;
    j["entropy_per_site"] = rep.entropy_per_site;
    j["strategy"] = rep.strategy_used;
    return j;
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

}  // namespace sofent
