#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semcache/cache.hpp"
#include "semcache/dataset.hpp"
#include "semcache/errors.hpp"
#include "semcache/rng.hpp"
#include "semcache/text.hpp"

namespace semcache {

enum class OrderPolicy { as_given, seeded_shuffle };
enum class InsertPolicy { on_miss, always };

inline std::string to_string(OrderPolicy p) {
    return p == OrderPolicy::as_given ? "as_given" : "seeded_shuffle";
}

inline OrderPolicy order_policy_from_string(const std::string& s) {
    if (s == "as_given") return OrderPolicy::as_given;
    if (s == "seeded_shuffle") return OrderPolicy::seeded_shuffle;
    throw ValidationError("order policy: unknown value \"" + s + "\"");
}

inline std::string to_string(InsertPolicy p) {
    return p == InsertPolicy::on_miss ? "on_miss" : "always";
}

inline InsertPolicy insert_policy_from_string(const std::string& s) {
    if (s == "on_miss") return InsertPolicy::on_miss;
    if (s == "always") return InsertPolicy::always;
    throw ValidationError("insert policy: unknown value \"" + s + "\"");
}

struct PlannedQuery {
    std::string query_text;
    std::string group_id;
    std::string answer;

    bool operator==(const PlannedQuery&) const = default;
};

struct ReplayPlan {
    std::vector<PlannedQuery> queries;
    OrderPolicy order_policy = OrderPolicy::as_given;
    std::uint64_t seed = 0;
};

// Flattens every original and variation into one query stream. as_given
// keeps file order, each group contiguous with the original first;
// seeded_shuffle permutes that stream with the given seed.
inline ReplayPlan build_plan(const std::vector<VariationGroup>& groups, OrderPolicy order_policy,
                             std::uint64_t seed) {
    ReplayPlan plan;
    plan.order_policy = order_policy;
    plan.seed = seed;
    for (const VariationGroup& g : groups) {
        g.validate();
        plan.queries.push_back({g.original.question, g.group_id, g.answer});
        for (const std::string& v : g.variations)
            plan.queries.push_back({v, g.group_id, g.answer});
    }
    if (order_policy == OrderPolicy::seeded_shuffle)
        seeded_shuffle(plan.queries, seed);
    return plan;
}

// ── confusion accounting ────────────────────────────────────────

struct ReplaySettings {
    std::uint64_t seed = 0;
    OrderPolicy order_policy = OrderPolicy::as_given;
    InsertPolicy insert_policy = InsertPolicy::on_miss;
};

struct ConfusionReport {
    std::uint64_t correct_hits = 0;
    std::uint64_t incorrect_hits = 0;
    std::uint64_t correct_misses = 0;
    std::uint64_t incorrect_misses = 0;
    std::uint64_t total = 0;
    double threshold = 0.0;
    std::string scorer_name;
    std::vector<EvalRecord> records;

    // Provenance echoed into report.json.
    std::uint64_t seed = 0;
    std::string order_policy_name = "as_given";
    std::string insert_policy_name = "on_miss";
    std::string embedder_fingerprint;

    bool operator==(const ConfusionReport&) const = default;

    void add(EvalRecord record) {
        record.validate();
        switch (record.outcome) {
        case Outcome::correct_hit: ++correct_hits; break;
        case Outcome::incorrect_hit: ++incorrect_hits; break;
        case Outcome::correct_miss: ++correct_misses; break;
        case Outcome::incorrect_miss: ++incorrect_misses; break;
        }
        ++total;
        records.push_back(std::move(record));
    }

    void check_partition() const {
        if (correct_hits + incorrect_hits + correct_misses + incorrect_misses != total ||
            total != records.size())
            throw ContractViolation("confusion report: counters do not partition the records");
    }

    std::uint64_t hits() const { return correct_hits + incorrect_hits; }
};

inline std::optional<double> precision_of(std::uint64_t ch, std::uint64_t ih) {
    if (ch + ih == 0)
        return std::nullopt;
    return static_cast<double>(ch) / static_cast<double>(ch + ih);
}

inline std::optional<double> recall_of(std::uint64_t ch, std::uint64_t im) {
    if (ch + im == 0)
        return std::nullopt;
    return static_cast<double>(ch) / static_cast<double>(ch + im);
}

inline std::optional<double> f1_of(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall || *precision + *recall == 0.0)
        return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

// ── replay ──────────────────────────────────────────────────────

// Sequential replay of a plan against an empty cache. Each query is looked
// up, classified against group ground truth, and inserted per the policy.
// "Expected" for misses means a same-group entry is cached right now, so
// the definition stays coherent under eviction.
inline ConfusionReport replay(const ReplayPlan& plan, SemanticCache& cache,
                              InsertPolicy insert_policy = InsertPolicy::on_miss) {
    if (cache.size() != 0)
        throw ValidationError("replay: cache must start empty");

    ConfusionReport report;
    report.threshold = cache.config().threshold;
    report.scorer_name = cache.scorer().name();
    report.seed = plan.seed;
    report.order_policy_name = to_string(plan.order_policy);
    report.insert_policy_name = to_string(insert_policy);
    report.embedder_fingerprint = cache.embedder().fingerprint();

    for (std::size_t i = 0; i < plan.queries.size(); ++i) {
        const PlannedQuery& q = plan.queries[i];
        Embedding embedding = cache.embedder().embed_one(q.query_text);

        bool expected = false;
        for (const CacheEntry* e : cache.entries())
            if (e->group_id && *e->group_id == q.group_id) {
                expected = true;
                break;
            }

        LookupResult r = cache.lookup(q.query_text, embedding);

        EvalRecord record;
        record.query = q.query_text;
        record.group_id = q.group_id;
        record.sequence_index = i;
        record.similarity_score = r.nearest_score;
        if (r.hit) {
            if (!r.entry || !r.entry->group_id)
                throw ContractViolation("replay: hit entry without group provenance");
            record.matched_group_id = *r.entry->group_id;
            record.outcome = *r.entry->group_id == q.group_id ? Outcome::correct_hit
                                                              : Outcome::incorrect_hit;
        } else {
            record.outcome = expected ? Outcome::incorrect_miss : Outcome::correct_miss;
        }
        report.add(std::move(record));

        if (!r.hit || insert_policy == InsertPolicy::always)
            cache.insert(q.query_text, embedding, q.answer, q.group_id);
    }
    report.check_partition();
    return report;
}

// ── calibration sweep ───────────────────────────────────────────

struct CalibrationPoint {
    double threshold = 0.0;
    std::uint64_t correct_hits = 0;
    std::uint64_t incorrect_hits = 0;
    std::uint64_t correct_misses = 0;
    std::uint64_t incorrect_misses = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const CalibrationPoint&) const = default;
};

struct CalibrationCurve {
    std::vector<CalibrationPoint> points;

    // Threshold with the best f1; ties go to the lowest threshold.
    std::optional<double> best_threshold() const {
        std::optional<double> best;
        double best_f1 = -1.0;
        for (const CalibrationPoint& p : points)
            if (p.f1 && *p.f1 > best_f1) {
                best_f1 = *p.f1;
                best = p.threshold;
            }
        return best;
    }
};

inline CalibrationPoint point_from_report(const ConfusionReport& r) {
    CalibrationPoint p;
    p.threshold = r.threshold;
    p.correct_hits = r.correct_hits;
    p.incorrect_hits = r.incorrect_hits;
    p.correct_misses = r.correct_misses;
    p.incorrect_misses = r.incorrect_misses;
    p.precision = precision_of(r.correct_hits, r.incorrect_hits);
    p.recall = recall_of(r.correct_hits, r.incorrect_misses);
    p.f1 = f1_of(p.precision, p.recall);
    return p;
}

// One replay per threshold, each from a fresh cache built by the factory,
// all over the identical plan.
inline CalibrationCurve sweep(const ReplayPlan& plan, const std::vector<double>& thresholds,
                              const std::function<SemanticCache(double)>& make_cache,
                              InsertPolicy insert_policy = InsertPolicy::on_miss) {
    if (thresholds.empty())
        throw ValidationError("sweep: thresholds list is empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0.0 || thresholds[i] > 1.0)
            throw ValidationError("sweep: threshold outside [0, 1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw ValidationError("sweep: thresholds must be strictly increasing");
    }
    CalibrationCurve curve;
    for (double t : thresholds) {
        SemanticCache cache = make_cache(t);
        if (cache.config().threshold != t)
            throw ContractViolation("sweep: cache factory ignored the threshold");
        curve.points.push_back(point_from_report(replay(plan, cache, insert_policy)));
    }
    return curve;
}

// "lo:hi:step" inclusive grid, or a comma-separated explicit list.
inline std::vector<double> parse_threshold_grid(const std::string& text) {
    auto parse_num = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size())
                throw ValidationError("thresholds: bad number \"" + s + "\"");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("thresholds: bad number \"" + s + "\"");
        }
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : text) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3)
            throw ValidationError("thresholds: expected lo:hi:step");
        double lo = parse_num(parts[0]);
        double hi = parse_num(parts[1]);
        double step = parse_num(parts[2]);
        if (lo > hi)
            throw ValidationError("thresholds: lo must be <= hi");
        if (step <= 0.0)
            throw ValidationError("thresholds: step must be positive");
        for (double t = lo; t <= hi + 1e-12; t += step)
            out.push_back(std::min(t, hi));
    } else {
        std::string cur;
        std::istringstream in(text);
        while (std::getline(in, cur, ','))
            out.push_back(parse_num(trim(cur)));
    }
    if (out.empty())
        throw ValidationError("thresholds: empty grid");
    for (double t : out)
        if (t < 0.0 || t > 1.0)
            throw ValidationError("thresholds: values must be in [0, 1]");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1])
            throw ValidationError("thresholds: values must be strictly increasing");
    return out;
}

// ── rendering ───────────────────────────────────────────────────

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw Error("number formatting failed");
    return std::string(buf, ptr);
}

inline std::string fmt_metric(const std::optional<double>& v) {
    return v ? fmt_double(*v) : "n/a";
}

} // namespace detail

inline json report_to_json(const ConfusionReport& r) {
    json records = json::array();
    for (const EvalRecord& rec : r.records)
        records.push_back(to_json(rec));
    return {{"correct_hits", r.correct_hits},
            {"incorrect_hits", r.incorrect_hits},
            {"correct_misses", r.correct_misses},
            {"incorrect_misses", r.incorrect_misses},
            {"total", r.total},
            {"threshold", r.threshold},
            {"scorer_name", r.scorer_name},
            {"config",
             {{"threshold", r.threshold},
              {"scorer_name", r.scorer_name},
              {"seed", r.seed},
              {"order_policy", r.order_policy_name},
              {"insert_policy", r.insert_policy_name},
              {"embedder_fingerprint", r.embedder_fingerprint}}},
            {"records", records}};
}

inline ConfusionReport report_from_json(const json& j) {
    ConfusionReport r;
    r.correct_hits = j.at("correct_hits").get<std::uint64_t>();
    r.incorrect_hits = j.at("incorrect_hits").get<std::uint64_t>();
    r.correct_misses = j.at("correct_misses").get<std::uint64_t>();
    r.incorrect_misses = j.at("incorrect_misses").get<std::uint64_t>();
    r.total = j.at("total").get<std::uint64_t>();
    r.threshold = j.at("threshold").get<double>();
    r.scorer_name = j.at("scorer_name").get<std::string>();
    const json& cfg = j.at("config");
    r.seed = cfg.at("seed").get<std::uint64_t>();
    r.order_policy_name = cfg.at("order_policy").get<std::string>();
    r.insert_policy_name = cfg.at("insert_policy").get<std::string>();
    r.embedder_fingerprint = cfg.at("embedder_fingerprint").get<std::string>();
    for (const json& rec : j.at("records"))
        r.records.push_back(eval_record_from_json(rec));
    r.check_partition();
    return r;
}

inline const std::string kSweepCsvHeader =
    "threshold,correct_hits,incorrect_hits,correct_misses,incorrect_misses,precision,recall,f1";

inline std::string curve_to_csv(const CalibrationCurve& curve) {
    std::string out = kSweepCsvHeader + "\n";
    for (const CalibrationPoint& p : curve.points) {
        out += detail::fmt_double(p.threshold);
        out += ',' + std::to_string(p.correct_hits);
        out += ',' + std::to_string(p.incorrect_hits);
        out += ',' + std::to_string(p.correct_misses);
        out += ',' + std::to_string(p.incorrect_misses);
        out += ',' + detail::fmt_metric(p.precision);
        out += ',' + detail::fmt_metric(p.recall);
        out += ',' + detail::fmt_metric(p.f1);
        out += '\n';
    }
    return out;
}

enum class ReportFormat { json_format, csv, markdown };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::json_format;
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown") return ReportFormat::markdown;
    throw ValidationError("report format: unknown value \"" + s + "\" (json, csv, markdown)");
}

// json is lossless; csv and markdown carry the four counters plus derived
// precision/recall/f1, markdown in the one-row strategy-table shape.
inline std::string summarize(const ConfusionReport& r, ReportFormat format) {
    std::optional<double> precision = precision_of(r.correct_hits, r.incorrect_hits);
    std::optional<double> recall = recall_of(r.correct_hits, r.incorrect_misses);
    std::optional<double> f1 = f1_of(precision, recall);
    switch (format) {
    case ReportFormat::json_format:
        return report_to_json(r).dump(2) + "\n";
    case ReportFormat::csv: {
        std::string out = kSweepCsvHeader + "\n";
        out += detail::fmt_double(r.threshold);
        out += ',' + std::to_string(r.correct_hits);
        out += ',' + std::to_string(r.incorrect_hits);
        out += ',' + std::to_string(r.correct_misses);
        out += ',' + std::to_string(r.incorrect_misses);
        out += ',' + detail::fmt_metric(precision);
        out += ',' + detail::fmt_metric(recall);
        out += ',' + detail::fmt_metric(f1);
        out += '\n';
        return out;
    }
    case ReportFormat::markdown: {
        std::string strategy = r.scorer_name + " (threshold " + detail::fmt_double(r.threshold) + ")";
        std::string out;
        out += "| Strategy | Correct Hits | Incorrect Hits | Correct Misses | Incorrect Misses |\n";
        out += "| --- | --- | --- | --- | --- |\n";
        out += "| " + strategy + " | " + std::to_string(r.correct_hits) + " | " +
               std::to_string(r.incorrect_hits) + " | " + std::to_string(r.correct_misses) +
               " | " + std::to_string(r.incorrect_misses) + " |\n";
        out += "\nPrecision: " + detail::fmt_metric(precision) +
               ", Recall: " + detail::fmt_metric(recall) + ", F1: " + detail::fmt_metric(f1) + "\n";
        return out;
    }
    }
    throw ValidationError("report format: unknown enum value");
}

inline void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path);
    out << text;
    if (!out)
        throw Error("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace semcache
