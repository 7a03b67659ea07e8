#include "cotrack/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cotrack/error.hpp"

namespace cotrack {

const char* to_string(PathwayMode m) {
    switch (m) {
        case PathwayMode::Combined: return "combined";
        case PathwayMode::FilterPartsOnly: return "filterparts";
        case PathwayMode::ConvNetOnly: return "convnet";
    }
    return "?";
}

const char* to_string(NetUpdate u) {
    switch (u) {
        case NetUpdate::Hcf: return "hcf";
        case NetUpdate::None: return "none";
        case NetUpdate::Full: return "full";
    }
    return "?";
}

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (...) {
    }
    throw InvalidInput("config: '" + key + "' expects a number, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long d = std::stol(v, &used);
        if (used == v.size()) return static_cast<int>(d);
    } catch (...) {
    }
    throw InvalidInput("config: '" + key + "' expects an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<int> to_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(to_int(key, item.substr(b, e - b + 1)));
    }
    return out;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Field {
    std::function<void(TrackerConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const TrackerConfig&)> get;
};

#define COTRACK_REAL(name, member)                                                                          \
    {name,                                                                                                  \
     {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); },     \
      [](const TrackerConfig& c) { return num(c.member); }}}
#define COTRACK_INT(name, member)                                                                           \
    {name,                                                                                                  \
     {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.member = to_int(k, v); },        \
      [](const TrackerConfig& c) { return std::to_string(c.member); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        COTRACK_REAL("alpha", alpha),
        COTRACK_INT("bootstrap_frames", bootstrap_frames),
        COTRACK_REAL("hcf_percentile", hcf_percentile),
        COTRACK_INT("hcf_min_history", hcf_min_history),
        COTRACK_REAL("sigma_g", sigma_g),
        COTRACK_REAL("mask_sigma_fraction", mask_sigma_fraction),
        COTRACK_REAL("search_factor", search_factor),
        COTRACK_INT("max_search_side", max_search_side),
        COTRACK_REAL("agreement_fraction", agreement_fraction),
        COTRACK_REAL("agreement_min_px", agreement_min_px),
        COTRACK_REAL("t_d", parts.t_d),
        COTRACK_REAL("p_plus", parts.p_plus),
        COTRACK_REAL("p_minus", parts.p_minus),
        COTRACK_INT("update_every", parts.update_every),
        COTRACK_INT("n_max", parts.n_max),
        COTRACK_INT("min_support", parts.min_support),
        COTRACK_INT("n_hard_negatives", parts.n_hard_negatives),
        COTRACK_INT("n_random_negatives", parts.n_random_negatives),
        COTRACK_INT("stride", parts.stride),
        COTRACK_REAL("lambda", parts.lambda),
        {"single_role",
         {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.parts.single_role = to_bool(k, v); },
          [](const TrackerConfig& c) { return std::string(c.parts.single_role ? "true" : "false"); }}},
        COTRACK_INT("orientation_bins", features.orientation_bins),
        {"encoder",
         {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.plan.encoder = to_list(k, v); },
          [](const TrackerConfig& c) { return join(c.plan.encoder); }}},
        {"head",
         {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.plan.head = to_list(k, v); },
          [](const TrackerConfig& c) { return join(c.plan.head); }}},
        {"pool_after",
         {[](TrackerConfig& c, const std::string& k, const std::string& v) { c.plan.pool_after = to_list(k, v); },
          [](const TrackerConfig& c) { return join(c.plan.pool_after); }}},
        COTRACK_REAL("lr", adam.lr),
        COTRACK_REAL("beta1", adam.beta1),
        COTRACK_REAL("beta2", adam.beta2),
        COTRACK_REAL("eps", adam.eps),
        COTRACK_INT("epochs", epochs),
        COTRACK_REAL("shift_fraction", shift_fraction),
        COTRACK_REAL("target_fraction", target_fraction),
        {"pathways",
         {[](TrackerConfig& c, const std::string&, const std::string& v) {
              if (v == "combined") c.pathways = PathwayMode::Combined;
              else if (v == "filterparts") c.pathways = PathwayMode::FilterPartsOnly;
              else if (v == "convnet") c.pathways = PathwayMode::ConvNetOnly;
              else throw InvalidInput("config: pathways must be combined|filterparts|convnet");
          },
          [](const TrackerConfig& c) { return std::string(to_string(c.pathways)); }}},
        {"net_update",
         {[](TrackerConfig& c, const std::string&, const std::string& v) {
              if (v == "hcf") c.net_update = NetUpdate::Hcf;
              else if (v == "none") c.net_update = NetUpdate::None;
              else if (v == "full") c.net_update = NetUpdate::Full;
              else throw InvalidInput("config: net_update must be hcf|none|full");
          },
          [](const TrackerConfig& c) { return std::string(to_string(c.net_update)); }}},
    };
    return table;
}

#undef COTRACK_REAL
#undef COTRACK_INT

}  // namespace

void apply_setting(TrackerConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(cfg, key, value);
            return;
        }
    }
    throw InvalidInput("config: unknown key '" + key + "'");
}

TrackerConfig parse_config(std::istream& in, TrackerConfig base) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto first = s.find_first_not_of(" \t\r\"");
            const auto last = s.find_last_not_of(" \t\r\"");
            return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
        };
        apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    validate(base);
    return base;
}

TrackerConfig load_config(const std::string& path, TrackerConfig base) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path);
    return parse_config(in, std::move(base));
}

std::string format_config(const TrackerConfig& cfg) {
    std::string out;
    for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
    return out;
}

void validate(const TrackerConfig& cfg) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw InvalidInput(std::string("config: ") + msg);
    };
    require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "alpha must lie in [0, 1]");
    require(cfg.bootstrap_frames >= 1, "bootstrap_frames must be >= 1");
    require(cfg.hcf_percentile > 0.0 && cfg.hcf_percentile <= 1.0, "hcf_percentile must lie in (0, 1]");
    require(cfg.sigma_g > 0.0 && cfg.mask_sigma_fraction > 0.0, "smoothing and mask widths must be positive");
    require(cfg.search_factor >= 1.0, "search_factor must be >= 1");
    require(cfg.max_search_side >= 16 && cfg.max_search_side % 4 == 0, "max_search_side must be a multiple of 4, >= 16");
    require(cfg.parts.t_d > 0.0, "t_d must be positive");
    require(cfg.parts.p_minus > 0.0 && cfg.parts.p_plus < 1.0 && cfg.parts.p_minus < cfg.parts.p_plus,
            "need 0 < p_minus < p_plus < 1");
    require(cfg.parts.update_every >= 1 && cfg.parts.n_max >= 1 && cfg.parts.stride >= 1, "bad part cadence/budget/stride");
    require(cfg.parts.lambda > 0.0, "lambda must be positive");
    require(cfg.epochs >= 0, "epochs must be >= 0");
    require(cfg.adam.lr > 0.0, "lr must be positive");
    require(cfg.shift_fraction >= 0.0 && cfg.shift_fraction < 0.25, "shift_fraction must lie in [0, 0.25)");
    require(cfg.target_fraction >= 0.0 && cfg.target_fraction < 0.5, "target_fraction must lie in [0, 0.5)");
    require(cfg.features.orientation_bins >= 1, "orientation_bins must be >= 1");
    require(cfg.plan.input == 3 + cfg.features.orientation_bins, "net input width must match the feature depth");
}

}  // namespace cotrack
