#include "harmonizer/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace harmonizer {

using nlohmann::json;

namespace {

// Reads the keys present in `obj` into the given fields and rejects anything else.
class FieldReader {
   public:
    FieldReader(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
        if (!obj_.is_object()) throw ConfigError(scope_ + ": expected an object");
    }

    template <typename T>
    FieldReader& read(const char* key, T& field) {
        seen_.insert(key);
        if (auto it = obj_.find(key); it != obj_.end()) {
            try {
                field = it->get<T>();
            } catch (const json::exception& e) {
                throw ConfigError(scope_ + key + ": " + e.what());
            }
        }
        return *this;
    }

    void finish() const {
        for (const auto& item : obj_.items())
            if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + scope_ + item.key() + "'");
    }

   private:
    const json& obj_;
    std::string scope_;
    std::set<std::string> seen_;
};

json idm_to_json(const IdmParams& p) {
    return {{"v0", p.v0}, {"T", p.T},         {"a", p.a},
            {"b", p.b},   {"delta", p.delta}, {"s0", p.s0},
            {"noise_std", p.noise_std}};
}

json controller_to_json(const ControllerParams& p) {
    return {{"kp", p.kp},       {"kd", p.kd},       {"h_des", p.h_des}, {"w", p.w},
            {"s_min", p.s_min}, {"h_min", p.h_min}, {"tau_s", p.tau_s}};
}

json energy_to_json(const EnergyParams& p) {
    return {{"C0", p.C0}, {"C1", p.C1}, {"C2", p.C2},       {"C3", p.C3},
            {"p0", p.p0}, {"p1", p.p1}, {"p2", p.p2},       {"q0", p.q0},
            {"q1", p.q1}, {"beta", p.beta}, {"grade", p.grade},
            {"grams_per_gallon", p.grams_per_gallon}};
}

json lane_change_to_json(const LaneChangeParams& p) {
    return {{"gap_threshold", p.gap_threshold},
            {"insert_prob_per_s", p.insert_prob_per_s},
            {"removal_period", p.removal_period},
            {"target_count", p.target_count}};
}

}  // namespace

json config_to_json(const SimConfig& config) {
    json doc = {
        {"platoon_size", config.platoon_size},
        {"dt", config.dt},
        {"penetration", config.penetration},
        {"seed", config.seed},
        {"vehicle_length", config.vehicle_length},
        {"controller", controller_to_json(config.controller)},
        {"idm", idm_to_json(config.idm)},
        {"energy", energy_to_json(config.energy)},
        {"lane_change", config.lane_change ? lane_change_to_json(*config.lane_change) : json(nullptr)},
        {"av_accel_bounds", json::array({config.av_accel_bounds.min, config.av_accel_bounds.max})},
        {"av_track_horizon", config.av_track_horizon},
        {"output_stride", config.output_stride},
    };
    return doc;
}

SimConfig config_from_json(const json& doc) {
    SimConfig config;
    json controller = json::object(), idm = json::object(), energy = json::object();
    json lane_change = nullptr, bounds = nullptr;

    FieldReader top(doc, "");
    top.read("platoon_size", config.platoon_size)
        .read("dt", config.dt)
        .read("penetration", config.penetration)
        .read("seed", config.seed)
        .read("vehicle_length", config.vehicle_length)
        .read("controller", controller)
        .read("idm", idm)
        .read("energy", energy)
        .read("lane_change", lane_change)
        .read("av_accel_bounds", bounds)
        .read("av_track_horizon", config.av_track_horizon)
        .read("output_stride", config.output_stride)
        .finish();

    auto& c = config.controller;
    FieldReader(controller, "controller.")
        .read("kp", c.kp)
        .read("kd", c.kd)
        .read("h_des", c.h_des)
        .read("w", c.w)
        .read("s_min", c.s_min)
        .read("h_min", c.h_min)
        .read("tau_s", c.tau_s)
        .finish();

    auto& i = config.idm;
    FieldReader(idm, "idm.")
        .read("v0", i.v0)
        .read("T", i.T)
        .read("a", i.a)
        .read("b", i.b)
        .read("delta", i.delta)
        .read("s0", i.s0)
        .read("noise_std", i.noise_std)
        .finish();

    auto& e = config.energy;
    FieldReader(energy, "energy.")
        .read("C0", e.C0)
        .read("C1", e.C1)
        .read("C2", e.C2)
        .read("C3", e.C3)
        .read("p0", e.p0)
        .read("p1", e.p1)
        .read("p2", e.p2)
        .read("q0", e.q0)
        .read("q1", e.q1)
        .read("beta", e.beta)
        .read("grade", e.grade)
        .read("grams_per_gallon", e.grams_per_gallon)
        .finish();

    if (!lane_change.is_null()) {
        LaneChangeParams lc;
        lc.target_count = config.platoon_size;
        FieldReader(lane_change, "lane_change.")
            .read("gap_threshold", lc.gap_threshold)
            .read("insert_prob_per_s", lc.insert_prob_per_s)
            .read("removal_period", lc.removal_period)
            .read("target_count", lc.target_count)
            .finish();
        config.lane_change = lc;
    }

    if (!bounds.is_null()) {
        if (!bounds.is_array() || bounds.size() != 2)
            throw ConfigError("av_accel_bounds: expected [a_min, a_max]");
        config.av_accel_bounds = {bounds[0].get<Scalar>(), bounds[1].get<Scalar>()};
    }
    return config;
}

std::string serialize_config(const SimConfig& config) { return config_to_json(config).dump(2) + "\n"; }

SimConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(doc);
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void save_config(const SimConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << serialize_config(config);
}

}  // namespace harmonizer
