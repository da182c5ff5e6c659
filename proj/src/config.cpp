#include "gms/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gms {

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "schedule.kind",     "schedule.T",
        "data.preset",       "data.weights",       "data.means",      "data.vars",
        "provider.kind",     "provider.path",      "provider.order",  "provider.iters",
        "provider.batch",    "provider.lr",        "provider.width",  "provider.depth",
        "provider.time_embed", "provider.seed",    "provider.ema",
        "solver.kind",       "solver.K",           "solver.seed",     "solver.n",
        "sampler.clip",      "sampler.last_step_noise",
        "gmm.steps",         "gmm.lr",             "gmm.warmup",      "gmm.min_lr",
        "gmm.schedule",
        "eval.L",            "eval.metrics",
        "diagnose.K",        "diagnose.draws",
        "output.dir",
    };
    return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string suggest_key(const std::string& key) {
    std::string best;
    std::size_t best_dist = 4;  // only suggest close matches
    for (const std::string& k : known_keys()) {
        const std::size_t dist = edit_distance(key, k);
        if (dist < best_dist) {
            best_dist = dist;
            best = k;
        }
    }
    return best;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct KeyValue {
    std::string key;  // dotted
    std::string value;
    int line;
    int column;
};

[[noreturn]] void fail(const std::string& origin, int line, int column, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                      msg);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

class ConfigReader {
public:
    ConfigReader(std::vector<KeyValue> entries, std::string origin)
        : entries_(std::move(entries)), origin_(std::move(origin)) {}

    const KeyValue* find(const std::string& key) const {
        for (const KeyValue& kv : entries_)
            if (kv.key == key) return &kv;
        return nullptr;
    }

    template <typename Fn>
    void with(const std::string& key, Fn&& fn) const {
        if (const KeyValue* kv = find(key)) {
            try {
                fn(*kv);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                fail(origin_, kv->line, kv->column, "invalid value for " + key + ": " + e.what());
            }
        }
    }

    double number(const KeyValue& kv) const {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(kv.value, &used);
        } catch (const std::exception&) {
            fail(origin_, kv.line, kv.column, "expected a number for " + kv.key);
        }
        if (trim(kv.value.substr(used)).size() > 0)
            fail(origin_, kv.line, kv.column, "trailing characters after number for " + kv.key);
        return v;
    }

    long integer(const KeyValue& kv) const {
        const double v = number(kv);
        if (v != std::floor(v))
            fail(origin_, kv.line, kv.column, "expected an integer for " + kv.key);
        return static_cast<long>(v);
    }

    bool boolean(const KeyValue& kv) const {
        if (kv.value == "true" || kv.value == "on" || kv.value == "1") return true;
        if (kv.value == "false" || kv.value == "off" || kv.value == "0") return false;
        fail(origin_, kv.line, kv.column, "expected a boolean for " + kv.key);
    }

    [[noreturn]] void error(const KeyValue& kv, const std::string& msg) const {
        fail(origin_, kv.line, kv.column, msg);
    }

    const std::string& origin() const { return origin_; }

private:
    std::vector<KeyValue> entries_;
    std::string origin_;
};

Mat parse_rows(const ConfigReader& reader, const KeyValue& kv) {
    const std::vector<std::string> rows = split_list(kv.value, ';');
    if (rows.empty()) reader.error(kv, "expected at least one component row");
    std::vector<std::vector<double>> values;
    for (const std::string& row : rows) {
        std::vector<double> entries;
        for (const std::string& item : split_list(row, ',')) {
            try {
                entries.push_back(std::stod(item));
            } catch (const std::exception&) {
                reader.error(kv, "expected numbers in " + kv.key);
            }
        }
        if (entries.empty()) reader.error(kv, "empty component row in " + kv.key);
        if (!values.empty() && entries.size() != values.front().size())
            reader.error(kv, "ragged component rows in " + kv.key);
        values.push_back(std::move(entries));
    }
    Mat out(values.size(), values.front().size());
    for (std::size_t r = 0; r < values.size(); ++r)
        for (std::size_t c = 0; c < values[r].size(); ++c) out(r, c) = values[r][c];
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    std::vector<KeyValue> entries;
    std::vector<std::string> raw_lines;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        raw_lines.push_back(line);
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                fail(origin, lineno, 1, "unterminated section header");
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (section.empty()) fail(origin, lineno, 1, "empty section name");
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            fail(origin, lineno, 1, "expected `key = value`");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) fail(origin, lineno, 1, "missing key before '='");
        if (section.empty()) fail(origin, lineno, 1, "key outside of any [section]");
        const int column = static_cast<int>(line.find(key[0]) + 1);
        const std::string dotted = section + "." + key;
        if (std::find(known_keys().begin(), known_keys().end(), dotted) == known_keys().end()) {
            const std::string hint = suggest_key(dotted);
            fail(origin, lineno, column,
                 "unknown key `" + dotted + "`" +
                     (hint.empty() ? "" : " (did you mean `" + hint + "`?)"));
        }
        for (const KeyValue& kv : entries)
            if (kv.key == dotted) fail(origin, lineno, column, "duplicate key `" + dotted + "`");
        entries.push_back({dotted, value, lineno, column});
    }

    ConfigReader reader(std::move(entries), origin);
    ExperimentConfig cfg;
    cfg.raw_lines = std::move(raw_lines);

    reader.with("schedule.kind",
                [&](const KeyValue& kv) { cfg.schedule_kind = schedule_kind_from_string(kv.value); });
    reader.with("schedule.T", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "schedule.T must be >= 1");
        cfg.T = static_cast<int>(v);
    });

    reader.with("data.preset", [&](const KeyValue& kv) {
        mixture_preset(kv.value);  // existence check
        cfg.data_preset = kv.value;
    });
    const bool explicit_data =
        reader.find("data.weights") || reader.find("data.means") || reader.find("data.vars");
    if (explicit_data) {
        const KeyValue* kw = reader.find("data.weights");
        const KeyValue* km = reader.find("data.means");
        const KeyValue* kv_ = reader.find("data.vars");
        if (!kw || !km || !kv_)
            throw ConfigError(origin +
                              ": explicit mixtures need all of data.weights, data.means, data.vars");
        const Mat wrows = parse_rows(reader, *kw);
        Vec weights(wrows.size());
        for (Eigen::Index i = 0; i < wrows.size(); ++i)
            weights[i] = wrows.reshaped().coeff(i);
        const Mat means = parse_rows(reader, *km);
        const Mat vars = parse_rows(reader, *kv_);
        try {
            cfg.data_explicit = make_mixture(weights, means, vars);
        } catch (const std::exception& e) {
            reader.error(*kw, std::string("invalid mixture: ") + e.what());
        }
    }

    reader.with("provider.kind", [&](const KeyValue& kv) {
        if (kv.value != "oracle" && kv.value != "net" && kv.value != "train")
            reader.error(kv, "provider.kind must be oracle, net or train");
        cfg.provider_kind = kv.value;
    });
    reader.with("provider.path", [&](const KeyValue& kv) { cfg.provider_path = kv.value; });
    reader.with("provider.order", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1 || v > 3) reader.error(kv, "provider.order must be 1..3");
        cfg.provider_order = static_cast<int>(v);
    });
    reader.with("provider.iters", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "provider.iters must be >= 1");
        cfg.hyper.iters = static_cast<int>(v);
    });
    reader.with("provider.batch", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "provider.batch must be >= 1");
        cfg.hyper.batch = static_cast<int>(v);
    });
    reader.with("provider.lr", [&](const KeyValue& kv) {
        const double v = reader.number(kv);
        if (v <= 0) reader.error(kv, "provider.lr must be > 0");
        cfg.hyper.lr = v;
    });
    reader.with("provider.width", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "provider.width must be >= 1");
        cfg.hyper.width = static_cast<int>(v);
    });
    reader.with("provider.depth", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "provider.depth must be >= 1");
        cfg.hyper.depth = static_cast<int>(v);
    });
    reader.with("provider.time_embed", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 2 || v % 2 != 0) reader.error(kv, "provider.time_embed must be even and >= 2");
        cfg.hyper.time_embed = static_cast<int>(v);
    });
    reader.with("provider.seed", [&](const KeyValue& kv) {
        cfg.hyper.seed = static_cast<std::uint64_t>(reader.integer(kv));
    });
    reader.with("provider.ema",
                [&](const KeyValue& kv) { cfg.hyper.ema = reader.boolean(kv); });

    reader.with("solver.kind",
                [&](const KeyValue& kv) { cfg.solver = sampler_kind_from_string(kv.value); });
    reader.with("solver.K", [&](const KeyValue& kv) {
        cfg.Ks.clear();
        for (const std::string& item : split_list(kv.value, ',')) {
            const int K = std::stoi(item);
            if (K < 1) reader.error(kv, "solver.K entries must be >= 1");
            cfg.Ks.push_back(K);
        }
        if (cfg.Ks.empty()) reader.error(kv, "solver.K needs at least one value");
    });
    reader.with("solver.seed", [&](const KeyValue& kv) {
        cfg.seeds.clear();
        for (const std::string& item : split_list(kv.value, ','))
            cfg.seeds.push_back(static_cast<std::uint64_t>(std::stoll(item)));
        if (cfg.seeds.empty()) reader.error(kv, "solver.seed needs at least one value");
    });
    reader.with("solver.n", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "solver.n must be >= 1");
        cfg.n = static_cast<int>(v);
    });

    reader.with("sampler.clip", [&](const KeyValue& kv) { cfg.clip = reader.boolean(kv); });
    reader.with("sampler.last_step_noise",
                [&](const KeyValue& kv) { cfg.last_step_noise = reader.boolean(kv); });

    reader.with("gmm.steps", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "gmm.steps must be >= 1");
        cfg.gmm.steps = static_cast<int>(v);
    });
    reader.with("gmm.lr", [&](const KeyValue& kv) {
        const double v = reader.number(kv);
        if (v <= 0) reader.error(kv, "gmm.lr must be > 0");
        cfg.gmm.lr = v;
    });
    reader.with("gmm.warmup", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 0) reader.error(kv, "gmm.warmup must be >= 0");
        cfg.gmm.warmup = static_cast<int>(v);
    });
    reader.with("gmm.min_lr", [&](const KeyValue& kv) {
        const double v = reader.number(kv);
        if (v < 0) reader.error(kv, "gmm.min_lr must be >= 0");
        cfg.gmm.min_lr = v;
    });
    reader.with("gmm.schedule", [&](const KeyValue& kv) {
        if (kv.value == "cosine")
            cfg.gmm.schedule = LrSchedule::cosine;
        else if (kv.value == "constant")
            cfg.gmm.schedule = LrSchedule::constant;
        else
            reader.error(kv, "gmm.schedule must be cosine or constant");
    });

    reader.with("eval.L", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 2) reader.error(kv, "eval.L must be >= 2");
        cfg.eval_L = static_cast<int>(v);
    });
    reader.with("eval.metrics", [&](const KeyValue& kv) {
        cfg.metrics = split_list(kv.value, ',');
        for (const std::string& m : cfg.metrics)
            if (m != "kde" && m != "l2") reader.error(kv, "eval.metrics entries must be kde or l2");
    });

    reader.with("diagnose.K", [&](const KeyValue& kv) {
        cfg.diagnose_Ks.clear();
        for (const std::string& item : split_list(kv.value, ','))
            cfg.diagnose_Ks.push_back(std::stoi(item));
    });
    reader.with("diagnose.draws", [&](const KeyValue& kv) {
        const long v = reader.integer(kv);
        if (v < 1) reader.error(kv, "diagnose.draws must be >= 1");
        cfg.diagnose_draws = static_cast<int>(v);
    });

    reader.with("output.dir", [&](const KeyValue& kv) { cfg.output_dir = kv.value; });

    // cross-key validation
    if (const KeyValue* kv = reader.find("solver.K")) {
        for (const int K : cfg.Ks)
            if (K > cfg.T)
                reader.error(*kv, "solver.K must be <= schedule.T (got " + std::to_string(K) +
                                      " > " + std::to_string(cfg.T) + ")");
    } else if (!cfg.Ks.empty() && cfg.Ks.front() > cfg.T) {
        throw ConfigError(origin + ": solver.K default exceeds schedule.T");
    }
    for (const int K : cfg.diagnose_Ks)
        if (K < 1 || K > cfg.T)
            throw ConfigError(origin + ": diagnose.K values must be in [1, schedule.T]");
    if (cfg.provider_kind == "net") {
        if (cfg.provider_path.empty())
            throw ConfigError(origin + ": provider.kind = net requires provider.path");
        if (!std::filesystem::exists(cfg.provider_path))
            throw ConfigError(origin + ": provider.path '" + cfg.provider_path +
                              "' does not exist");
    }
    if (explicit_data && reader.find("data.preset"))
        throw ConfigError(origin + ": give either data.preset or an explicit mixture, not both");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

}  // namespace gms
