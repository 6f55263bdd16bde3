#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckam/errors.hpp"

namespace ckam {

/// Flat key/value configuration with INI-style sections: keys are stored as
/// "section.key". Flags can override entries after parsing.
struct Config {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }
    double get_real(const std::string& key, double fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ConfigError("config key " + key + " is not a number: " + it->second);
        }
    }
    int get_int(const std::string& key, int fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        try {
            return std::stoi(it->second);
        } catch (...) {
            throw ConfigError("config key " + key + " is not an integer: " + it->second);
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline Config parse_config(std::istream& is) {
    Config cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string val = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) +
                                           ": empty key");
        cfg.kv[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse_config(f);
}

/// FNV-1a digest of a byte string, hex-encoded; used for artifact digests in
/// the run manifest.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string file_digest(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return fnv1a_hex(ss.str());
}

/// Accumulates artifact names and digests; written as a flat, stably ordered
/// manifest.json in the output directory.
struct Manifest {
    nlohmann::ordered_json doc;

    Manifest() {
        doc["tool"] = "ckam";
        doc["version"] = "0.1.0";
    }
    void set(const std::string& key, const nlohmann::ordered_json& v) { doc[key] = v; }
    void echo_config(const Config& cfg) {
        nlohmann::ordered_json j;
        for (const auto& [k, v] : cfg.kv) j[k] = v;
        doc["config"] = j;
    }
    void add_artifact(const std::filesystem::path& p) {
        doc["artifacts"][p.filename().string()] = file_digest(p);
    }
    void write(const std::filesystem::path& dir) const {
        std::ofstream f(dir / "manifest.json");
        f << doc.dump(2) << "\n";
    }
};

/// Minimal SVG scene: polylines, markers and labels in data coordinates,
/// mapped to a fixed pixel viewport.
struct SvgPlot {
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    int width = 640, height = 480, margin = 48;
    std::ostringstream body;

    double px(double x) const {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin);
    }
    double py(double y) const {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
    }

    void polyline(const std::vector<std::array<double, 2>>& pts,
                  const std::string& color, double stroke_width = 2.0,
                  const std::string& dash = "") {
        body << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
             << stroke_width << "\"";
        if (!dash.empty()) body << " stroke-dasharray=\"" << dash << "\"";
        body << " points=\"";
        char buf[48];
        for (const auto& p : pts) {
            if (p[0] < x_min || p[0] > x_max || p[1] < y_min || p[1] > y_max) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p[0]), py(p[1]));
            body << buf;
        }
        body << "\"/>\n";
    }
    void vline(double x, const std::string& color, const std::string& dash = "6,4") {
        polyline({{x, y_min}, {x, y_max}}, color, 1.5, dash);
    }
    void marker(double x, double y, const std::string& color, double r = 4.0) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.1f\" fill=\"%s\"/>\n",
                      px(x), py(y), r, color.c_str());
        body << buf;
    }
    void text(double x, double y, const std::string& s) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">",
                      px(x), py(y));
        body << buf << s << "</text>\n";
    }
    void axes(const std::string& x_label, const std::string& y_label) {
        polyline({{x_min, 0}, {x_max, 0}}, "#888", 1.0);
        if (x_min < 0 && x_max > 0) polyline({{0, y_min}, {0, y_max}}, "#888", 1.0);
        text(x_max - 0.12 * (x_max - x_min), -0.05 * (y_max - y_min), x_label);
        text(0.02 * (x_max - x_min), y_max - 0.03 * (y_max - y_min), y_label);
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path);
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
          << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
          << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body.str() << "</svg>\n";
    }
};

} // namespace ckam
