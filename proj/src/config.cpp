#include "freshlink/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "freshlink/log.hpp"

namespace freshlink::log {

Level threshold() {
    static Level level = [] {
        const char* env = std::getenv("FRESHLINK_LOG");
        if (env == nullptr)
            return Level::Warn;
        std::string v(env);
        if (v == "error") return Level::Error;
        if (v == "warn") return Level::Warn;
        if (v == "info") return Level::Info;
        if (v == "debug") return Level::Debug;
        return Level::Warn;
    }();
    return level;
}

void write(Level level, const std::string& message) {
    if (level > threshold())
        return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace freshlink::log

namespace freshlink {

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError(line, key, "expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_uint(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        if (!v.empty() && v[0] == '-')
            throw std::invalid_argument("");
        std::uint64_t u = std::stoull(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return u;
    } catch (...) {
        throw ConfigError(line, key, "expected a non-negative integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(line, key, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(trim(item), line, key));
    return out;
}

void require(bool ok, int line, const std::string& key, const std::string& what) {
    if (!ok)
        throw ConfigError(line, key, what);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

PolicyKind policy_from_string(const std::string& name) {
    if (name == "whittle") return PolicyKind::Whittle;
    if (name == "maxage") return PolicyKind::MaxAge;
    if (name == "roundrobin") return PolicyKind::RoundRobin;
    if (name == "random") return PolicyKind::UniformRandom;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

SimConfig parse_config(const std::string& text) {
    SimConfig cfg;
    using Setter = std::function<void(SimConfig&, const std::string&, int)>;
    static const std::map<std::string, Setter> schema = {
        {"seed", [](SimConfig& c, const std::string& v, int l) { c.seed = parse_uint(v, l, "seed"); }},
        {"duration_s", [](SimConfig& c, const std::string& v, int l) {
             c.duration_s = parse_double(v, l, "duration_s");
             require(c.duration_s > 0, l, "duration_s", "must be > 0"); }},
        {"n", [](SimConfig& c, const std::string& v, int l) {
             c.n = parse_uint(v, l, "n");
             require(c.n >= 1, l, "n", "must be >= 1"); }},
        {"loss", [](SimConfig& c, const std::string& v, int l) {
             c.loss = parse_double(v, l, "loss");
             require(c.loss >= 0 && c.loss < 1, l, "loss", "must be in [0,1)"); }},
        {"per_link_loss", [](SimConfig& c, const std::string& v, int l) {
             c.per_link_loss = parse_double_list(v, l, "per_link_loss");
             for (double p : c.per_link_loss)
                 require(p >= 0 && p < 1, l, "per_link_loss", "entries must be in [0,1)"); }},
        {"latency_s", [](SimConfig& c, const std::string& v, int l) {
             c.latency_s = parse_double(v, l, "latency_s");
             require(c.latency_s >= 0, l, "latency_s", "must be >= 0"); }},
        {"bitrate_bps", [](SimConfig& c, const std::string& v, int l) {
             c.bitrate_bps = parse_double(v, l, "bitrate_bps");
             require(c.bitrate_bps > 0, l, "bitrate_bps", "must be > 0"); }},
        {"turnaround_s", [](SimConfig& c, const std::string& v, int l) {
             c.turnaround_s = parse_double(v, l, "turnaround_s");
             require(c.turnaround_s >= 0, l, "turnaround_s", "must be >= 0"); }},
        {"clock_offset_s", [](SimConfig& c, const std::string& v, int l) {
             c.clock_offset_s = parse_double_list(v, l, "clock_offset_s"); }},
        {"gen_fps", [](SimConfig& c, const std::string& v, int l) {
             c.gen_fps = parse_double(v, l, "gen_fps");
             require(c.gen_fps > 0, l, "gen_fps", "must be > 0"); }},
        {"rate_fps", [](SimConfig& c, const std::string& v, int l) {
             c.rate_fps = parse_double(v, l, "rate_fps");
             require(c.rate_fps >= 0, l, "rate_fps", "must be >= 0"); }},
        {"payload_bytes", [](SimConfig& c, const std::string& v, int l) {
             c.payload_bytes = parse_uint(v, l, "payload_bytes");
             require(c.payload_bytes >= 1, l, "payload_bytes", "must be >= 1"); }},
        {"max_payload", [](SimConfig& c, const std::string& v, int l) {
             c.max_payload = parse_uint(v, l, "max_payload");
             require(c.max_payload >= 1 && c.max_payload <= 65535, l, "max_payload",
                     "must be in [1,65535]"); }},
        {"queue", [](SimConfig& c, const std::string& v, int l) {
             if (v == "lifo") c.queue = QueueDiscipline::Lifo1;
             else if (v == "fifo") c.queue = QueueDiscipline::FifoRc;
             else throw ConfigError(l, "queue", "expected lifo or fifo, got '" + v + "'"); }},
        {"capacity", [](SimConfig& c, const std::string& v, int l) {
             c.capacity = parse_uint(v, l, "capacity");
             require(c.capacity >= 1, l, "capacity", "must be >= 1"); }},
        {"policy", [](SimConfig& c, const std::string& v, int l) {
             try { c.policy = policy_from_string(v); }
             catch (const std::invalid_argument& e) { throw ConfigError(l, "policy", e.what()); } }},
        {"timeout_s", [](SimConfig& c, const std::string& v, int l) {
             c.timeout_s = parse_double(v, l, "timeout_s");
             require(c.timeout_s > 0, l, "timeout_s", "must be > 0"); }},
        {"window", [](SimConfig& c, const std::string& v, int l) {
             c.window = parse_uint(v, l, "window");
             require(c.window >= 1, l, "window", "must be >= 1"); }},
        {"p_floor", [](SimConfig& c, const std::string& v, int l) {
             c.p_floor = parse_double(v, l, "p_floor");
             require(c.p_floor > 0 && c.p_floor <= 1, l, "p_floor", "must be in (0,1]"); }},
        {"sync_period_s", [](SimConfig& c, const std::string& v, int l) {
             c.sync_period_s = parse_double(v, l, "sync_period_s");
             require(c.sync_period_s > 0, l, "sync_period_s", "must be > 0"); }},
        {"sync_enabled", [](SimConfig& c, const std::string& v, int l) {
             c.sync_enabled = parse_bool(v, l, "sync_enabled"); }},
        {"sticky_update", [](SimConfig& c, const std::string& v, int l) {
             c.sticky_update = parse_bool(v, l, "sticky_update"); }},
        {"scenario", [](SimConfig& c, const std::string& v, int l) {
             if (v == "telemetry") c.scenario = Scenario::PlainTelemetry;
             else if (v == "tracking") c.scenario = Scenario::MobilityTracking;
             else throw ConfigError(l, "scenario", "expected telemetry or tracking, got '" + v + "'"); }},
        {"target_speed_max", [](SimConfig& c, const std::string& v, int l) {
             c.target_speed_max = parse_double(v, l, "target_speed_max");
             require(c.target_speed_max >= 0, l, "target_speed_max", "must be >= 0"); }},
        {"resample_period_s", [](SimConfig& c, const std::string& v, int l) {
             c.resample_period_s = parse_double(v, l, "resample_period_s");
             require(c.resample_period_s > 0, l, "resample_period_s", "must be > 0"); }},
        {"pause_prob", [](SimConfig& c, const std::string& v, int l) {
             c.pause_prob = parse_double(v, l, "pause_prob");
             require(c.pause_prob >= 0 && c.pause_prob <= 1, l, "pause_prob", "must be in [0,1]"); }},
        {"fov_radius", [](SimConfig& c, const std::string& v, int l) {
             c.fov_radius = parse_double(v, l, "fov_radius");
             require(c.fov_radius >= 0, l, "fov_radius", "must be >= 0"); }},
        {"agent_speed_max", [](SimConfig& c, const std::string& v, int l) {
             c.agent_speed_max = parse_double(v, l, "agent_speed_max");
             require(c.agent_speed_max >= 0, l, "agent_speed_max", "must be >= 0"); }},
        {"waypoint_horizon_s", [](SimConfig& c, const std::string& v, int l) {
             c.waypoint_horizon_s = parse_double(v, l, "waypoint_horizon_s");
             require(c.waypoint_horizon_s > 0, l, "waypoint_horizon_s", "must be > 0"); }},
        {"waypoint_count", [](SimConfig& c, const std::string& v, int l) {
             c.waypoint_count = parse_uint(v, l, "waypoint_count");
             require(c.waypoint_count >= 1 && c.waypoint_count <= 255, l, "waypoint_count",
                     "must be in [1,255]"); }},
        {"control_enabled", [](SimConfig& c, const std::string& v, int l) {
             c.control_enabled = parse_bool(v, l, "control_enabled"); }},
        {"arena_w", [](SimConfig& c, const std::string& v, int l) {
             c.arena_w = parse_double(v, l, "arena_w");
             require(c.arena_w > 0, l, "arena_w", "must be > 0"); }},
        {"arena_h", [](SimConfig& c, const std::string& v, int l) {
             c.arena_h = parse_double(v, l, "arena_h");
             require(c.arena_h > 0, l, "arena_h", "must be > 0"); }},
        {"error_sample_s", [](SimConfig& c, const std::string& v, int l) {
             c.error_sample_s = parse_double(v, l, "error_sample_s");
             require(c.error_sample_s > 0, l, "error_sample_s", "must be > 0"); }},
        {"slot_s", [](SimConfig& c, const std::string& v, int l) {
             c.slot_s = parse_double(v, l, "slot_s");
             require(c.slot_s > 0, l, "slot_s", "must be > 0"); }},
        {"txprob", [](SimConfig& c, const std::string& v, int l) {
             c.txprob = parse_double(v, l, "txprob");
             require(c.txprob >= 0 && c.txprob <= 1, l, "txprob", "must be in [0,1]"); }},
    };

    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError(line_no, "", "malformed section header");
            continue;  // sections group keys cosmetically; keys are global
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "", "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(line_no, "", "empty key");
        auto it = schema.find(key);
        if (it == schema.end())
            throw ConfigError(line_no, key, "unknown key");
        if (!seen.insert(key).second)
            throw ConfigError(line_no, key, "duplicate key");
        it->second(cfg, value, line_no);
    }

    for (const auto& [key, setter] : schema)
        if (!seen.count(key))
            log::info("config: default applied for '" + key + "'");

    cfg.validate();
    return cfg;
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string render_config(const SimConfig& c) {
    std::string out;
    out += "[sim]\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    out += "duration_s = " + fmt(c.duration_s) + "\n";
    out += "n = " + std::to_string(c.n) + "\n";
    out += "scenario = " +
           std::string(c.scenario == Scenario::MobilityTracking ? "tracking" : "telemetry") + "\n";
    out += "[link]\n";
    out += "loss = " + fmt(c.loss) + "\n";
    if (!c.per_link_loss.empty())
        out += "per_link_loss = " + join(c.per_link_loss) + "\n";
    out += "latency_s = " + fmt(c.latency_s) + "\n";
    out += "bitrate_bps = " + fmt(c.bitrate_bps) + "\n";
    out += "turnaround_s = " + fmt(c.turnaround_s) + "\n";
    if (!c.clock_offset_s.empty())
        out += "clock_offset_s = " + join(c.clock_offset_s) + "\n";
    out += "[traffic]\n";
    out += "gen_fps = " + fmt(c.gen_fps) + "\n";
    out += "rate_fps = " + fmt(c.rate_fps) + "\n";
    out += "payload_bytes = " + std::to_string(c.payload_bytes) + "\n";
    out += "max_payload = " + std::to_string(c.max_payload) + "\n";
    out += "queue = " + std::string(c.queue == QueueDiscipline::Lifo1 ? "lifo" : "fifo") + "\n";
    out += "capacity = " + std::to_string(c.capacity) + "\n";
    out += "[leader]\n";
    out += "policy = " + to_string(c.policy) + "\n";
    out += "timeout_s = " + fmt(c.timeout_s) + "\n";
    out += "window = " + std::to_string(c.window) + "\n";
    out += "p_floor = " + fmt(c.p_floor) + "\n";
    out += "sync_period_s = " + fmt(c.sync_period_s) + "\n";
    out += "sync_enabled = " + std::string(c.sync_enabled ? "true" : "false") + "\n";
    out += "sticky_update = " + std::string(c.sticky_update ? "true" : "false") + "\n";
    out += "[tracking]\n";
    out += "target_speed_max = " + fmt(c.target_speed_max) + "\n";
    out += "resample_period_s = " + fmt(c.resample_period_s) + "\n";
    out += "pause_prob = " + fmt(c.pause_prob) + "\n";
    out += "fov_radius = " + fmt(c.fov_radius) + "\n";
    out += "agent_speed_max = " + fmt(c.agent_speed_max) + "\n";
    out += "waypoint_horizon_s = " + fmt(c.waypoint_horizon_s) + "\n";
    out += "waypoint_count = " + std::to_string(c.waypoint_count) + "\n";
    out += "control_enabled = " + std::string(c.control_enabled ? "true" : "false") + "\n";
    out += "arena_w = " + fmt(c.arena_w) + "\n";
    out += "arena_h = " + fmt(c.arena_h) + "\n";
    out += "error_sample_s = " + fmt(c.error_sample_s) + "\n";
    out += "[baseline]\n";
    out += "slot_s = " + fmt(c.slot_s) + "\n";
    out += "txprob = " + fmt(c.txprob) + "\n";
    return out;
}

}  // namespace freshlink
