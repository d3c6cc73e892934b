#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace egofall {

/// Environment variable that overrides the `cache_dir` key.
inline constexpr const char* kCacheDirEnv = "EGOFALL_CACHE_DIR";

inline constexpr const char* kDefaultDecoderCommand =
    "{self} demux --input {input} --video-out {video_out} --audio-out {audio_out}";

struct ConfigKey {
    const char* name;
    const char* default_value;
    // Operational keys (paths, worker counts, commands) do not change results and stay out of the fingerprint.
    bool operational;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"seed", "1", false},
        {"jobs", "0", true},
        {"cache_dir", "egofall_cache", true},
        {"manifest", "", true},
        {"decoder.command", kDefaultDecoderCommand, true},
        {"dataset.activity_classes", "", false},
        {"dataset.fall_activities", "", false},
        {"video.fps", "30", false},
        {"video.work_width", "256", false},
        {"video.work_height", "128", false},
        {"flow.search_radius", "7", false},
        {"temporal.window_s", "8", false},
        {"temporal.target_len", "238", false},
        {"temporal.align_mode", "min_peak", false},
        {"audio.sample_rate", "16000", false},
        {"audio.frame_len_s", "0.025", false},
        {"audio.hop_s", "0.010", false},
        {"audio.n_mels", "40", false},
        {"audio.n_coeffs", "13", false},
        {"audio.log_floor", "1e-10", false},
        {"deep.backend", "precomputed", false},
        {"deep.command", "", true},
        {"deep.precomputed_dir", "", true},
        {"base.hog", "rf", false},
        {"base.lbp", "rf", false},
        {"base.flow", "rf", false},
        {"base.deep", "svm", false},
        {"base.audio", "svm", false},
        {"rf.trees", "100", false},
        {"svm.epochs", "30", false},
        {"svm.lambda", "0.001", false},
        {"mlp.hidden", "128", false},
        {"mlp.epochs", "200", false},
        {"mlp.lr", "0.05", false},
        {"mlp.batch", "32", false},
        {"fusion.modalities", "hog,lbp,flow,deep,audio", false},
        {"fusion.hidden", "32", false},
        {"fusion.epochs", "300", false},
        {"fusion.lr", "0.05", false},
        {"fusion.batch", "32", false},
        {"fusion.inner_folds", "5", false},
        {"eval.task", "binary", false},
        {"eval.k", "10", false},
        {"eval.excluded_subjects", "", false},
    };
    return keys;
}

/// Flat key = value configuration. Every key has a default, so an empty file is valid.
class PipelineConfig {
public:
    PipelineConfig() {
        for (const auto& k : config_keys()) {
            values_[k.name] = k.default_value;
        }
    }

    static PipelineConfig parse(std::istream& in, const std::string& origin = "config") {
        PipelineConfig c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            line = detail::trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                fail(Errc::BadConfig, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            }
            const auto key = detail::trim(line.substr(0, eq));
            try {
                c.set(key, detail::trim(line.substr(eq + 1)));
            } catch (const Error& e) {
                fail(Errc::BadConfig, origin + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        return c;
    }

    static PipelineConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    /// Loads a file, then applies the cache directory environment override.
    static PipelineConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            fail(Errc::IoFailure, "cannot open config " + path.string());
        }
        auto c = parse(in, path.string());
        // relative paths inside a config file resolve against the file's directory
        for (const char* key : {"manifest", "cache_dir", "deep.precomputed_dir"}) {
            const auto& v = c.values_[key];
            if (!v.empty() && std::filesystem::path(v).is_relative()) {
                c.values_[key] = (path.parent_path() / v).lexically_normal().string();
            }
        }
        c.apply_environment();
        return c;
    }

    void apply_environment() {
        if (const char* dir = std::getenv(kCacheDirEnv); dir && *dir) {
            values_["cache_dir"] = dir;
        }
    }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) {
            fail(Errc::BadConfig, "unknown config key '" + key + "'");
        }
        values_[key] = value;
    }

    const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            fail(Errc::BadConfig, "unknown config key '" + key + "'");
        }
        return it->second;
    }

    long integer(const std::string& key) const {
        const auto& v = str(key);
        try {
            std::size_t used = 0;
            const long x = std::stol(v, &used);
            if (used == v.size()) {
                return x;
            }
        } catch (const std::exception&) {
        }
        fail(Errc::BadConfig, key + ": '" + v + "' is not an integer");
    }

    double real(const std::string& key) const {
        const auto& v = str(key);
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used == v.size()) {
                return x;
            }
        } catch (const std::exception&) {
        }
        fail(Errc::BadConfig, key + ": '" + v + "' is not a number");
    }

    long positive(const std::string& key) const {
        const long v = integer(key);
        if (v <= 0) {
            fail(Errc::BadConfig, key + " must be positive");
        }
        return v;
    }

    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        for (auto& s : detail::split(str(key), ',')) {
            s = detail::trim(s);
            if (!s.empty()) {
                out.push_back(s);
            }
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Result-affecting keys only, sorted by key.
    std::map<std::string, std::string> echo() const {
        std::map<std::string, std::string> out;
        for (const auto& k : config_keys()) {
            if (!k.operational) {
                out[k.name] = values_.at(k.name);
            }
        }
        return out;
    }

    /// Hash of the canonical "key=value" lines of echo().
    std::string fingerprint() const {
        std::string canon;
        for (const auto& [k, v] : echo()) {
            canon += k + "=" + v + "\n";
        }
        return hex64(fnv1a(canon));
    }

    std::string to_text() const {
        std::string out;
        for (const auto& k : config_keys()) {
            out += std::string(k.name) + " = " + values_.at(k.name) + "\n";
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

} // namespace egofall
