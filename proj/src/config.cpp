#include "memud/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace memud {

GaTableEntry ga_table(std::size_t users) {
    if (users <= 10) {
        return {60, 250, 300, 500};
    }
    if (users <= 15) {
        return {150, 300, 750, 1000};
    }
    return {400, 400, 2000, 1500};
}

double ExperimentConfig::effective_alpha() const {
    if (static_channel) {
        return 1.0;
    }
    if (doppler || symbol_period) {
        if (!(doppler && symbol_period)) {
            throw ConfigError("channel.doppler and channel.symbol_period must be given together");
        }
        return alpha_from_doppler(*doppler, *symbol_period);
    }
    return alpha;
}

double ExperimentConfig::effective_phi_std() const {
    if (static_channel) {
        return 0.0;
    }
    return phi_std.value_or(stationary_phi_std(effective_alpha()));
}

namespace {

GAConfig sized(GAConfig ga, const GaSizing& size, std::size_t default_population,
               std::size_t default_generations) {
    ga.population = size.population.value_or(default_population);
    const std::size_t generations = size.generations.value_or(default_generations);
    ga.eval_budget =
        size.budget.value_or(GAConfig::budget_for(ga.population, generations, ga.p_m0, ga.p_c0));
    return ga;
}

}  // namespace

DetectorSettings ExperimentConfig::settings_for(std::size_t u) const {
    const GaTableEntry t = ga_table(u);
    DetectorSettings s;
    s.ma = ma;
    s.ma.ga = sized(ma.ga, ma_size, t.ma_population, t.ma_generations);
    s.std_ga = std_ga;
    s.std_ga.ga = sized(std_ga.ga, std_size, t.std_population, t.std_generations);
    s.std_ga.ga.adaptive = false;
    return s;
}

void ExperimentConfig::validate() const {
    if (detectors.empty()) {
        throw ConfigError("experiment.detectors is empty");
    }
    for (const auto& d : detectors) {
        if (!is_detector(d)) {
            throw ConfigError("unknown detector '" + d + "'");
        }
    }
    if (degree < 5 || degree > 7) {
        throw ConfigError("experiment.degree must be 5, 6 or 7");
    }
    if (frames < 1 || frame_length < 1 || users < 1 || workers < 1) {
        throw ConfigError("frames, frame_length, users and workers must be at least 1");
    }
    if (snr_db.empty() || users_grid.empty() || near_far_grid_db.empty()) {
        throw ConfigError("experiment grids must not be empty");
    }
    if (std::any_of(users_grid.begin(), users_grid.end(), [](std::size_t u) { return u < 1; })) {
        throw ConfigError("experiment.users_grid entries must be at least 1");
    }
    const std::size_t family = (std::size_t{1} << degree) + 1;
    const std::size_t widest =
        std::max(users, *std::max_element(users_grid.begin(), users_grid.end()));
    if (widest > family) {
        throw ConfigError("at most " + std::to_string(family) + " users fit a degree-" +
                          std::to_string(degree) + " code family");
    }
    if (noise_var && !(*noise_var > 0.0)) {
        throw ConfigError("experiment.noise_var must be positive");
    }
    const double a = effective_alpha();
    if (!(a > 0.0 && a <= 1.0)) {
        throw ConfigError("channel alpha must lie in (0, 1]");
    }
    if (!(effective_phi_std() >= 0.0)) {
        throw ConfigError("channel.phi_std must be non-negative");
    }
    try {
        const auto s = settings_for(users);
        s.ma.ga.validate();
        s.ma.lk.validate();
        s.std_ga.ga.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    switch (kind) {
        case ExperimentKind::ber_vs_snr:
            break;
        case ExperimentKind::capacity:
            cfg.snr_db = {10.0};
            cfg.near_far_db = 0.0;
            break;
        case ExperimentKind::channel_mse:
            cfg.users = 8;
            cfg.snr_db = {10.0};
            cfg.near_far_db = 0.0;
            cfg.detectors = {"ma"};
            cfg.ma.genie_init = false;
            break;
        case ExperimentKind::near_far:
            cfg.users = 4;
            cfg.noise_var = 0.5;
            cfg.snr_db = {4, 6, 8, 10, 12, 14, 16, 18};
            cfg.detectors = {"ma", "decorrelator", "mf"};
            break;
    }
    return cfg;
}

ExperimentKind parse_kind(const std::string& text) {
    if (text == "ber_vs_snr" || text == "ber-snr") {
        return ExperimentKind::ber_vs_snr;
    }
    if (text == "capacity") {
        return ExperimentKind::capacity;
    }
    if (text == "channel_mse" || text == "mse") {
        return ExperimentKind::channel_mse;
    }
    if (text == "near_far" || text == "near-far") {
        return ExperimentKind::near_far;
    }
    throw ConfigError("unknown experiment kind '" + text + "'");
}

std::string kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::ber_vs_snr:
            return "ber_vs_snr";
        case ExperimentKind::capacity:
            return "capacity";
        case ExperimentKind::channel_mse:
            return "channel_mse";
        case ExperimentKind::near_far:
            return "near_far";
    }
    return "unknown";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) {
        throw ConfigError("expected a number, got an empty value");
    }
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    return v;
}

std::uint64_t to_uint(const std::string& raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

bool to_bool(const std::string& raw) {
    std::string s = trim(raw);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw ConfigError("expected a boolean, got '" + s + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

template <typename T, typename Conv>
Setter field(T ExperimentConfig::*member, Conv conv) {
    return [member, conv](ExperimentConfig& c, const std::string& v) { c.*member = conv(v); };
}

// GA settings shared by the [ma] and [stdga] sections.
void add_ga_keys(std::map<std::string, Setter>& keys, const std::string& section,
                 GAConfig& (*ga)(ExperimentConfig&), GaSizing& (*size)(ExperimentConfig&)) {
    auto num = [&](const std::string& key, double GAConfig::*m) {
        keys[section + "." + key] = [ga, m](ExperimentConfig& c, const std::string& v) {
            ga(c).*m = to_double(v);
        };
    };
    keys[section + ".population"] = [size](ExperimentConfig& c, const std::string& v) {
        size(c).population = static_cast<std::size_t>(to_uint(v));
    };
    keys[section + ".generations"] = [size](ExperimentConfig& c, const std::string& v) {
        size(c).generations = static_cast<std::size_t>(to_uint(v));
    };
    keys[section + ".budget"] = [size](ExperimentConfig& c, const std::string& v) {
        size(c).budget = to_uint(v);
    };
    num("sigma_mut", &GAConfig::sigma_mut);
    num("warm_sigma", &GAConfig::warm_sigma);
    num("elite_fraction", &GAConfig::elite_fraction);
    num("elite_mut_factor", &GAConfig::elite_mut_factor);
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> k;
        k["experiment.kind"] = [](ExperimentConfig& c, const std::string& v) {
            c.kind = parse_kind(trim(v));
        };
        k["experiment.detectors"] = [](ExperimentConfig& c, const std::string& v) {
            c.detectors = parse_name_list(v);
        };
        k["experiment.users"] = field(&ExperimentConfig::users,
                                      [](const std::string& v) { return to_uint(v); });
        k["experiment.users_grid"] = [](ExperimentConfig& c, const std::string& v) {
            c.users_grid.clear();
            for (double u : parse_double_list(v)) {
                if (u < 1 || u != std::floor(u)) {
                    throw ConfigError("experiment.users_grid needs positive integers");
                }
                c.users_grid.push_back(static_cast<std::size_t>(u));
            }
        };
        k["experiment.degree"] = field(&ExperimentConfig::degree,
                                       [](const std::string& v) { return static_cast<int>(to_uint(v)); });
        k["experiment.frame_length"] = field(&ExperimentConfig::frame_length,
                                             [](const std::string& v) { return to_uint(v); });
        k["experiment.frames"] = field(&ExperimentConfig::frames,
                                       [](const std::string& v) { return to_uint(v); });
        k["experiment.snr_db"] = field(&ExperimentConfig::snr_db, parse_double_list);
        k["experiment.near_far_db"] = field(&ExperimentConfig::near_far_db, to_double);
        k["experiment.near_far_grid_db"] = field(&ExperimentConfig::near_far_grid_db,
                                                 parse_double_list);
        k["experiment.noise_var"] = [](ExperimentConfig& c, const std::string& v) {
            c.noise_var = to_double(v);
        };
        k["experiment.noiseless"] = field(&ExperimentConfig::noiseless, to_bool);
        k["experiment.seed"] = field(&ExperimentConfig::seed, to_uint);
        k["experiment.workers"] = field(&ExperimentConfig::workers,
                                        [](const std::string& v) { return to_uint(v); });
        k["experiment.min_error_events"] = field(&ExperimentConfig::min_error_events, to_uint);
        k["experiment.scoring"] = [](ExperimentConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "aligned") {
                c.scoring = Scoring::aligned;
            } else if (s == "differential") {
                c.scoring = Scoring::differential;
            } else {
                throw ConfigError("experiment.scoring must be aligned or differential");
            }
        };
        k["experiment.mse_estimate"] = [](ExperimentConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "tracked") {
                c.mse_estimate = MseEstimate::tracked;
            } else if (s == "final") {
                c.mse_estimate = MseEstimate::final;
            } else {
                throw ConfigError("experiment.mse_estimate must be tracked or final");
            }
        };

        k["channel.alpha"] = field(&ExperimentConfig::alpha, to_double);
        k["channel.doppler"] = [](ExperimentConfig& c, const std::string& v) {
            c.doppler = to_double(v);
        };
        k["channel.symbol_period"] = [](ExperimentConfig& c, const std::string& v) {
            c.symbol_period = to_double(v);
        };
        k["channel.phi_std"] = [](ExperimentConfig& c, const std::string& v) {
            c.phi_std = to_double(v);
        };
        k["channel.initial"] = [](ExperimentConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "rayleigh") {
                c.initial = InitialFading::rayleigh;
            } else if (s == "unit") {
                c.initial = InitialFading::unit;
            } else {
                throw ConfigError("channel.initial must be rayleigh or unit");
            }
        };
        k["channel.static"] = field(&ExperimentConfig::static_channel, to_bool);

        add_ga_keys(
            k, "ma", [](ExperimentConfig& c) -> GAConfig& { return c.ma.ga; },
            [](ExperimentConfig& c) -> GaSizing& { return c.ma_size; });
        auto ma_num = [&k](const std::string& key, double GAConfig::*m) {
            k["ma." + key] = [m](ExperimentConfig& c, const std::string& v) {
                c.ma.ga.*m = to_double(v);
            };
        };
        ma_num("p_m0", &GAConfig::p_m0);
        ma_num("p_c0", &GAConfig::p_c0);
        ma_num("p_m_min", &GAConfig::p_m_min);
        ma_num("p_m_max", &GAConfig::p_m_max);
        ma_num("p_c_min", &GAConfig::p_c_min);
        ma_num("p_c_max", &GAConfig::p_c_max);
        k["ma.adaptive"] = [](ExperimentConfig& c, const std::string& v) {
            c.ma.ga.adaptive = to_bool(v);
        };
        k["ma.invert_entropy_control"] = [](ExperimentConfig& c, const std::string& v) {
            c.ma.ga.invert_entropy_control = to_bool(v);
        };
        k["ma.genie_init"] = [](ExperimentConfig& c, const std::string& v) {
            c.ma.genie_init = to_bool(v);
        };
        k["ma.warm_from"] = [](ExperimentConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "ga") {
                c.ma.warm_from = WarmSource::ga;
            } else if (s == "refined") {
                c.ma.warm_from = WarmSource::refined;
            } else if (s == "reference") {
                c.ma.warm_from = WarmSource::reference;
            } else {
                throw ConfigError("ma.warm_from must be ga, refined or reference");
            }
        };
        k["ma.reference_smoothing"] = [](ExperimentConfig& c, const std::string& v) {
            c.ma.reference_smoothing = to_double(v);
        };
        k["ma.max_passes"] = [](ExperimentConfig& c, const std::string& v) {
            c.ma.lk.max_passes = static_cast<std::size_t>(to_uint(v));
        };
        k["ma.gain_mode"] = [](ExperimentConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "incremental") {
                c.ma.lk.mode = GainMode::incremental;
            } else if (s == "full") {
                c.ma.lk.mode = GainMode::full;
            } else {
                throw ConfigError("ma.gain_mode must be incremental or full");
            }
        };

        add_ga_keys(
            k, "stdga", [](ExperimentConfig& c) -> GAConfig& { return c.std_ga.ga; },
            [](ExperimentConfig& c) -> GaSizing& { return c.std_size; });
        k["stdga.p_m"] = [](ExperimentConfig& c, const std::string& v) {
            c.std_ga.ga.p_m0 = to_double(v);
        };
        k["stdga.p_c"] = [](ExperimentConfig& c, const std::string& v) {
            c.std_ga.ga.p_c0 = to_double(v);
        };
        k["stdga.reference_smoothing"] = [](ExperimentConfig& c, const std::string& v) {
            c.std_ga.reference_smoothing = to_double(v);
        };
        k["stdga.genie_init"] = [](ExperimentConfig& c, const std::string& v) {
            c.std_ga.genie_init = to_bool(v);
        };

        k["output.path"] = [](ExperimentConfig& c, const std::string& v) { c.output = trim(v); };
        k["output.trace"] = field(&ExperimentConfig::trace, to_bool);
        return k;
    }();
    return table;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) {
            throw ConfigError("empty entry in list '" + text + "'");
        }
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(to_double(parts[0]));
        } else if (parts.size() == 3) {
            const double start = to_double(parts[0]);
            const double step = to_double(parts[1]);
            const double stop = to_double(parts[2]);
            if (!(step > 0.0) || stop < start) {
                throw ConfigError("range '" + item + "' needs step > 0 and stop >= start");
            }
            const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
            for (std::size_t i = 0; i < count; ++i) {
                out.push_back(start + static_cast<double>(i) * step);
            }
        } else {
            throw ConfigError("cannot parse list entry '" + item + "'");
        }
    }
    if (out.empty()) {
        throw ConfigError("list must not be empty");
    }
    return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto& item : split(text, ',')) {
        if (item.empty()) {
            throw ConfigError("empty entry in list '" + text + "'");
        }
        out.push_back(item);
    }
    if (out.empty()) {
        throw ConfigError("list must not be empty");
    }
    return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        it->second(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) {
        keys.push_back(k);
    }
    return keys;
}

namespace {

void apply_tree(ExperimentConfig& cfg, const boost::property_tree::ptree& tree) {
    static const std::vector<std::string> sections{"experiment", "channel", "ma", "stdga",
                                                   "output"};
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("key '" + section + "' is outside any section");
        }
        if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
            throw ConfigError("unknown config section '" + section + "'");
        }
        for (const auto& [key, value] : body) {
            apply_setting(cfg, section + "." + key, value.data());
        }
    }
}

}  // namespace

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    apply_tree(cfg, tree);
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    apply_tree(cfg, tree);
}

}  // namespace memud
