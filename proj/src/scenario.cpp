#include "pmcw/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pmcw/interpolator.hpp"

namespace pmcw {

namespace pt = boost::property_tree;

namespace {

const std::vector<ConfigKey> kKeys = {
    {"plan", "preset", "pmcw1s", "built-in plan pmcw1..pmcw4 (full scale) or pmcw1s..pmcw4s (M / 8)"},
    {"plan", "prbs_length", "", "N, chips per PRBS (2^m - 1); overrides the preset"},
    {"plan", "repetitions", "", "A, PRBS copies per block, first one is the cyclic prefix"},
    {"plan", "blocks", "", "M, payload and pilot blocks"},
    {"plan", "sfo_prbs_count", "", "M_SFO, odd PRBS count of the SFO preamble"},
    {"plan", "pilot_spacing", "", "pilot every this many blocks"},
    {"plan", "sample_rate", "", "F_s in Hz"},
    {"plan", "carrier_frequency", "", "f_c in Hz (Doppler and velocity scaling)"},
    {"channel", "sto_samples", "0", "timing offset in samples, may be fractional"},
    {"channel", "cfo_hz", "0", "carrier frequency offset"},
    {"channel", "cfo_phase_rad", "0", "carrier phase at the first sample"},
    {"channel", "sfo_ppm", "0", "sampling frequency offset"},
    {"channel", "snr_db", "inf", "per-sample SNR; inf disables noise"},
    {"channel", "paths", "0:1:0:0", "multipath taps delay_s:gain_re:gain_im:doppler_hz separated by ';', strongest first"},
    {"run", "mode", "comm", "comm | radar | loopback (loopback forces an ideal channel)"},
    {"run", "trials", "100", "Monte Carlo trials"},
    {"run", "seed", "1", "seed base; trial seeds derive from it"},
    {"run", "output_dir", "out", "artifact directory"},
    {"run", "workers", "0", "worker threads, 0 = hardware concurrency"},
    {"run", "dump_iq", "false", "write transmit and receive IQ of trial 0"},
    {"receiver", "enable_sc", "true", "S&C timing and CFO; false uses genie timing and no CFO correction"},
    {"receiver", "enable_sfo", "true", "Tsai SFO estimate and resampling"},
    {"receiver", "pilot_corrections", "true", "residual SFO and Doppler from pilots"},
    {"receiver", "equalize", "true", "per-bin equalization with the pilot CFR"},
    {"receiver", "residual_cfo_hz", "0", "CFO injected after acquisition"},
    {"receiver", "sfo_band_fraction", "0.85", "fraction of the band used by the Tsai fits"},
    {"receiver", "integer_cfo_range", "8", "integer CFO search range in bins"},
    {"receiver", "interpolator_taps", "32", "windowed-sinc taps (even, 2..64)"},
    {"receiver", "interpolator_beta", "10", "Kaiser beta of the interpolator"},
    {"radar", "targets", "15:20:0", "targets range_m:velocity_mps:gain_db separated by ';'"},
    {"radar", "snr_db", "-10", "per-sample SNR of the echo"},
    {"radar", "threshold_db", "20", "detection threshold above the map median"},
    {"radar", "hann", "false", "Hann window across blocks"},
    {"sweep", "snr_db", "", "comma-separated SNR grid (empty: channel value)"},
    {"sweep", "cfo_hz", "", "comma-separated CFO grid"},
    {"sweep", "sfo_ppm", "", "comma-separated SFO grid"},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    try {
        std::size_t used = 0;
        if (!t.empty() && t[0] == '-') throw std::invalid_argument(t);
        const unsigned long long u = std::stoull(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return u;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v, 17);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void reject_unknown(const pt::ptree& tree) {
    std::set<std::pair<std::string, std::string>> known;
    for (const auto& k : kKeys) known.emplace(k.section, k.name);
    for (const auto& [section, body] : tree) {
        if (section == "meta") continue;  // written by manifest_text, informational only
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' must sit inside a [section]");
        for (const auto& [key, value] : body)
            if (!known.count({section, key})) throw ConfigError("unknown config key " + section + "." + key);
    }
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::comm: return "comm";
        case Mode::radar: return "radar";
        case Mode::loopback: return "loopback";
    }
    return "comm";
}

Mode parse_mode(const std::string& s) {
    if (s == "comm") return Mode::comm;
    if (s == "radar") return Mode::radar;
    if (s == "loopback") return Mode::loopback;
    throw ConfigError("run.mode: '" + s + "' is not one of comm, radar, loopback");
}

const std::vector<ConfigKey>& config_keys() { return kKeys; }

std::string config_keys_help() {
    std::string out = "Config keys ([section] key = value; --set section.key=value overrides):\n";
    std::string section;
    for (const auto& k : kKeys) {
        if (section != k.section) {
            section = k.section;
            out += "  [" + section + "]\n";
        }
        char line[256];
        std::snprintf(line, sizeof(line), "    %-20s %-10s %s\n", k.name,
                      (*k.fallback ? k.fallback : std::string(k.section) == "plan" ? "(preset)" : "(empty)"), k.help);
        out += line;
    }
    return out;
}

std::vector<PathSpec> parse_paths(const std::string& text) {
    std::vector<PathSpec> out;
    for (const auto& item : split(text, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 4) throw ConfigError("channel.paths: '" + item + "' needs delay_s:gain_re:gain_im:doppler_hz");
        out.push_back({to_double("channel.paths", f[0]), {to_double("channel.paths", f[1]), to_double("channel.paths", f[2])},
                       to_double("channel.paths", f[3])});
    }
    if (out.empty()) throw ConfigError("channel.paths: at least one path required");
    return out;
}

std::string format_paths(const std::vector<PathSpec>& paths) {
    std::string out;
    for (std::size_t i = 0; i < paths.size(); ++i)
        out += (i ? ";" : "") + fmt(paths[i].delay_s) + ":" + fmt(paths[i].gain.real()) + ":" + fmt(paths[i].gain.imag()) +
               ":" + fmt(paths[i].doppler_hz);
    return out;
}

std::vector<TargetSpec> parse_targets(const std::string& text) {
    std::vector<TargetSpec> out;
    for (const auto& item : split(text, ';')) {
        if (item.empty()) continue;
        const auto f = split(item, ':');
        if (f.size() != 3) throw ConfigError("radar.targets: '" + item + "' needs range_m:velocity_mps:gain_db");
        out.push_back({to_double("radar.targets", f[0]), to_double("radar.targets", f[1]), to_double("radar.targets", f[2])});
    }
    return out;
}

std::string format_targets(const std::vector<TargetSpec>& targets) {
    std::string out;
    for (std::size_t i = 0; i < targets.size(); ++i)
        out += (i ? ";" : "") + fmt(targets[i].range_m) + ":" + fmt(targets[i].velocity_mps) + ":" + fmt(targets[i].gain_db);
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ','))
        if (!item.empty()) out.push_back(to_double("list", item));
    return out;
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, std::uint32_t stream) {
    return splitmix64(splitmix64(base) ^ splitmix64((static_cast<std::uint64_t>(trial) << 8) | stream));
}

void Scenario::validate() const {
    plan.validate();
    if (trials < 1) throw ConfigError("run.trials must be >= 1");
    channel.validate(plan.sample_rate);
    if (receiver.sfo_band_fraction <= 0.0 || receiver.sfo_band_fraction > 1.0)
        throw ConfigError("receiver.sfo_band_fraction must lie in (0, 1]");
    if (receiver.integer_cfo_range < 0) throw ConfigError("receiver.integer_cfo_range must be >= 0");
    FractionalInterpolator probe(receiver.interpolator_taps, receiver.interpolator_beta, 16);
    for (const auto& t : radar.targets)
        if (t.range_m < 0.0) throw ConfigError("radar.targets: negative range");
    if (mode == Mode::radar && radar.targets.empty()) throw ConfigError("radar mode needs at least one target");
}

Scenario parse_scenario(const std::string& ini_text, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        std::istringstream is(ini_text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + o + "' must look like section.key=value");
        tree.put(pt::ptree::path_type(trim(o.substr(0, eq)), '.'), trim(o.substr(eq + 1)));
    }
    reject_unknown(tree);

    auto get = [&](const char* section, const char* key) -> std::optional<std::string> {
        const auto v = tree.get_optional<std::string>(pt::ptree::path_type(std::string(section) + "." + key, '.'));
        if (v) return trim(*v);
        return std::nullopt;
    };
    auto name = [](const char* section, const char* key) { return std::string(section) + "." + key; };

    Scenario s;
    s.preset = get("plan", "preset").value_or("pmcw1s");
    s.plan = preset_plan(s.preset);
    if (auto v = get("plan", "prbs_length")) s.plan.prbs_length = to_uint(name("plan", "prbs_length"), *v);
    if (auto v = get("plan", "repetitions")) s.plan.repetitions = to_uint(name("plan", "repetitions"), *v);
    if (auto v = get("plan", "blocks")) s.plan.blocks = to_uint(name("plan", "blocks"), *v);
    if (auto v = get("plan", "sfo_prbs_count")) s.plan.sfo_prbs_count = to_uint(name("plan", "sfo_prbs_count"), *v);
    if (auto v = get("plan", "pilot_spacing")) s.plan.pilot_spacing = to_uint(name("plan", "pilot_spacing"), *v);
    if (auto v = get("plan", "sample_rate")) s.plan.sample_rate = to_double(name("plan", "sample_rate"), *v);
    if (auto v = get("plan", "carrier_frequency"))
        s.plan.carrier_frequency = to_double(name("plan", "carrier_frequency"), *v);
    s.plan.sc_length = validate_s_and_c_length(s.plan.prbs_length);

    auto dbl = [&](const char* section, const char* key, double& target) {
        if (auto v = get(section, key)) target = to_double(name(section, key), *v);
    };
    auto boolean = [&](const char* section, const char* key, bool& target) {
        if (auto v = get(section, key)) target = to_bool(name(section, key), *v);
    };

    dbl("channel", "sto_samples", s.channel.sto_samples);
    dbl("channel", "cfo_hz", s.channel.cfo_hz);
    dbl("channel", "cfo_phase_rad", s.channel.cfo_phase_rad);
    dbl("channel", "sfo_ppm", s.channel.sfo_ppm);
    dbl("channel", "snr_db", s.channel.snr_db);
    if (auto v = get("channel", "paths")) s.channel.paths = parse_paths(*v);

    if (auto v = get("run", "mode")) s.mode = parse_mode(*v);
    if (auto v = get("run", "trials")) s.trials = to_uint("run.trials", *v);
    if (auto v = get("run", "seed")) s.seed = to_uint("run.seed", *v);
    if (auto v = get("run", "output_dir")) s.output_dir = *v;
    if (auto v = get("run", "workers")) s.workers = to_uint("run.workers", *v);
    boolean("run", "dump_iq", s.dump_iq);

    boolean("receiver", "enable_sc", s.receiver.enable_sc);
    boolean("receiver", "enable_sfo", s.receiver.enable_sfo);
    boolean("receiver", "pilot_corrections", s.receiver.pilot_corrections);
    boolean("receiver", "equalize", s.receiver.equalize);
    dbl("receiver", "residual_cfo_hz", s.receiver.residual_cfo_hz);
    dbl("receiver", "sfo_band_fraction", s.receiver.sfo_band_fraction);
    if (auto v = get("receiver", "integer_cfo_range"))
        s.receiver.integer_cfo_range = static_cast<int>(to_uint("receiver.integer_cfo_range", *v));
    if (auto v = get("receiver", "interpolator_taps"))
        s.receiver.interpolator_taps = static_cast<int>(to_uint("receiver.interpolator_taps", *v));
    dbl("receiver", "interpolator_beta", s.receiver.interpolator_beta);

    if (auto v = get("radar", "targets")) s.radar.targets = parse_targets(*v);
    dbl("radar", "snr_db", s.radar.snr_db);
    dbl("radar", "threshold_db", s.radar.threshold_db);
    boolean("radar", "hann", s.radar.hann);

    if (auto v = get("sweep", "snr_db")) s.sweep.snr_db = parse_list(*v);
    if (auto v = get("sweep", "cfo_hz")) s.sweep.cfo_hz = parse_list(*v);
    if (auto v = get("sweep", "sfo_ppm")) s.sweep.sfo_ppm = parse_list(*v);

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str(), overrides);
}

namespace {

std::string experiment_text(const Scenario& s) {
    const auto& p = s.plan;
    const auto& c = s.channel;
    const auto& r = s.receiver;
    std::ostringstream os;
    os << "[plan]\n"
       << "preset = " << s.preset << "\n"
       << "prbs_length = " << p.prbs_length << "\n"
       << "repetitions = " << p.repetitions << "\n"
       << "blocks = " << p.blocks << "\n"
       << "sfo_prbs_count = " << p.sfo_prbs_count << "\n"
       << "pilot_spacing = " << p.pilot_spacing << "\n"
       << "sample_rate = " << fmt(p.sample_rate) << "\n"
       << "carrier_frequency = " << fmt(p.carrier_frequency) << "\n"
       << "\n[channel]\n"
       << "sto_samples = " << fmt(c.sto_samples) << "\n"
       << "cfo_hz = " << fmt(c.cfo_hz) << "\n"
       << "cfo_phase_rad = " << fmt(c.cfo_phase_rad) << "\n"
       << "sfo_ppm = " << fmt(c.sfo_ppm) << "\n"
       << "snr_db = " << fmt(c.snr_db) << "\n"
       << "paths = " << format_paths(c.paths) << "\n"
       << "\n[receiver]\n"
       << "enable_sc = " << fmt_bool(r.enable_sc) << "\n"
       << "enable_sfo = " << fmt_bool(r.enable_sfo) << "\n"
       << "pilot_corrections = " << fmt_bool(r.pilot_corrections) << "\n"
       << "equalize = " << fmt_bool(r.equalize) << "\n"
       << "residual_cfo_hz = " << fmt(r.residual_cfo_hz) << "\n"
       << "sfo_band_fraction = " << fmt(r.sfo_band_fraction) << "\n"
       << "integer_cfo_range = " << r.integer_cfo_range << "\n"
       << "interpolator_taps = " << r.interpolator_taps << "\n"
       << "interpolator_beta = " << fmt(r.interpolator_beta) << "\n"
       << "\n[radar]\n"
       << "targets = " << format_targets(s.radar.targets) << "\n"
       << "snr_db = " << fmt(s.radar.snr_db) << "\n"
       << "threshold_db = " << fmt(s.radar.threshold_db) << "\n"
       << "hann = " << fmt_bool(s.radar.hann) << "\n"
       << "\n[sweep]\n"
       << "snr_db = " << join(s.sweep.snr_db) << "\n"
       << "cfo_hz = " << join(s.sweep.cfo_hz) << "\n"
       << "sfo_ppm = " << join(s.sweep.sfo_ppm) << "\n";
    return os.str();
}

}  // namespace

std::string scenario_hash(const Scenario& s) {
    const std::string text = experiment_text(s) + "mode = " + to_string(s.mode) + "\ntrials = " + std::to_string(s.trials);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_text(const Scenario& s) {
    const FractionalInterpolator interp(s.receiver.interpolator_taps, s.receiver.interpolator_beta);
    std::ostringstream os;
    os << "[meta]\n"
       << "scenario_hash = " << scenario_hash(s) << "\n"
       << "seed = " << s.seed << "\n"
       << "interpolator = " << interp.description() << "\n"
       << "sc_length = " << s.plan.sc_length << "\n"
       << "frame_length = " << s.plan.frame_length() << "\n"
       << "\n[run]\n"
       << "mode = " << to_string(s.mode) << "\n"
       << "trials = " << s.trials << "\n"
       << "seed = " << s.seed << "\n"
       << "output_dir = " << s.output_dir.string() << "\n"
       << "workers = " << s.workers << "\n"
       << "dump_iq = " << fmt_bool(s.dump_iq) << "\n\n"
       << experiment_text(s);
    return os.str();
}

}  // namespace pmcw
