#include "tkg/eval.hpp"

#include "tkg/error.hpp"
#include "tkg/json_io.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>

namespace tkg {

std::vector<QAItem> load_dataset(std::istream& in) {
    std::vector<QAItem> items;
    std::set<std::string> ids;
    for_each_jsonl(in, [&](const json& record, std::size_t line) {
        QAItem item;
        item.id = record.at("id").get<std::string>();
        item.question = record.at("question").get<std::string>();
        item.query_time = timestamp_from_json(record.value("query_time", json(nullptr)));
        if (!record.contains("gold_answers")) {
            throw ParseError("record " + std::to_string(items.size()) + " has no gold_answers", line);
        }
        item.gold_answers = record.at("gold_answers").get<std::vector<std::string>>();
        if (item.gold_answers.empty()) {
            throw ParseError("record " + std::to_string(items.size()) + " has an empty gold_answers list", line);
        }
        item.domain = record.value("domain", "");
        item.tags = record.value("tags", std::vector<std::string>{});
        if (!ids.insert(item.id).second) {
            throw ParseError("duplicate item id '" + item.id + "'", line);
        }
        items.push_back(std::move(item));
    });
    return items;
}

std::vector<QAItem> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open dataset " + path.string());
    }
    return load_dataset(in);
}

void save_dataset(const std::vector<QAItem>& items, std::ostream& out) {
    for (const auto& item : items) {
        json record{{"id", item.id},
                    {"question", item.question},
                    {"query_time", timestamp_to_json(item.query_time)},
                    {"gold_answers", item.gold_answers},
                    {"domain", item.domain}};
        if (!item.tags.empty()) {
            record["tags"] = item.tags;
        }
        out << record.dump() << '\n';
    }
}

bool is_correct(const std::string& predicted, const std::vector<std::string>& gold_answers) {
    const std::string p = normalize_answer(predicted);
    if (p.empty()) {
        return false;
    }
    return std::any_of(gold_answers.begin(), gold_answers.end(),
                       [&](const std::string& g) { return normalize_answer(g) == p; });
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
    if (values.empty()) {
        return {0.0, 0.0};
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) {
        sq += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::optional<double> EvalReport::accuracy_for(const std::vector<QAItem>& dataset, const std::string& tag) const {
    std::set<std::string> wanted;
    for (const auto& item : dataset) {
        if (std::find(item.tags.begin(), item.tags.end(), tag) != item.tags.end()) {
            wanted.insert(item.id);
        }
    }
    std::size_t total = 0;
    std::size_t correct = 0;
    for (const auto& v : verdicts) {
        if (wanted.contains(v.item_id)) {
            ++total;
            correct += v.correct ? 1 : 0;
        }
    }
    if (total == 0) {
        return std::nullopt;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

json EvalReport::summary() const {
    return {{"kind", "summary"},
            {"runs", runs},
            {"seed", seed},
            {"per_run_accuracy", per_run_accuracy},
            {"mean", mean},
            {"std", std}};
}

void EvalReport::write_jsonl(std::ostream& out) const {
    out << json{{"kind", "header"}, {"metric", "exact_match"}, {"std", "population"}, {"runs", runs}, {"seed", seed}}
               .dump()
        << '\n';
    for (const auto& v : verdicts) {
        out << json{{"kind", "verdict"},
                    {"run", v.run},
                    {"id", v.item_id},
                    {"predicted", v.predicted},
                    {"correct", v.correct},
                    {"no_answer", v.no_answer},
                    {"confidence_mass", v.confidence_mass}}
                   .dump()
            << '\n';
    }
    out << summary().dump() << '\n';
}

EvalReport run_eval(const std::vector<QAItem>& dataset, const GraphStore& store, const Encoder& encoder,
                    const Oracle& oracle, const ReasonerConfig& config, const EvalOptions& options) {
    if (options.runs < 1) {
        throw ValidationError("runs must be >= 1");
    }
    if (dataset.empty()) {
        throw ValidationError("dataset is empty");
    }
    const EmbeddingIndex index = build_entity_index(store, encoder);
    const Reasoner reasoner(store, index, encoder, oracle, config);

    std::vector<const QAItem*> ordered;
    for (const auto& item : dataset) {
        ordered.push_back(&item);
    }
    std::sort(ordered.begin(), ordered.end(), [](const QAItem* a, const QAItem* b) { return a->id < b->id; });

    auto judge_item = [&](const QAItem& item, std::size_t run) {
        Verdict v;
        v.item_id = item.id;
        v.run = run;
        try {
            const Answer a = reasoner.answer(item.question, item.query_time);
            v.predicted = a.value;
            v.confidence_mass = a.confidence_mass;
            v.correct = is_correct(a.value, item.gold_answers);
        } catch (const NoAnswerError&) {
            v.no_answer = true;
        }
        return v;
    };

    EvalReport report;
    report.runs = options.runs;
    report.seed = options.seed;
    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
    for (std::size_t run = 0; run < options.runs; ++run) {
        std::vector<Verdict> verdicts(ordered.size());
        if (jobs == 1) {
            for (std::size_t i = 0; i < ordered.size(); ++i) {
                verdicts[i] = judge_item(*ordered[i], run);
            }
        } else {
            std::vector<std::future<void>> workers;
            for (std::size_t w = 0; w < jobs; ++w) {
                workers.push_back(std::async(std::launch::async, [&, w] {
                    for (std::size_t i = w; i < ordered.size(); i += jobs) {
                        verdicts[i] = judge_item(*ordered[i], run);
                    }
                }));
            }
            for (auto& f : workers) {
                f.get();
            }
        }
        std::size_t correct = 0;
        for (auto& v : verdicts) {
            correct += v.correct ? 1 : 0;
            report.verdicts.push_back(std::move(v));
        }
        report.per_run_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(ordered.size()));
    }
    std::tie(report.mean, report.std) = mean_and_std(report.per_run_accuracy);
    return report;
}

std::string Comparison::table() const {
    char buf[256];
    std::string out = "kg       mean    std     runs\n";
    std::snprintf(buf, sizeof buf, "before   %.4f  %.4f  %zu\n", before.mean, before.std, before.runs);
    out += buf;
    std::snprintf(buf, sizeof buf, "after    %.4f  %.4f  %zu\n", after.mean, after.std, after.runs);
    out += buf;
    std::snprintf(buf, sizeof buf, "delta    %+.4f\n", delta);
    out += buf;
    return out;
}

Comparison compare_kgs(const std::vector<QAItem>& dataset, const GraphStore& before, const GraphStore& after,
                       const Encoder& encoder, const Oracle& oracle, const ReasonerConfig& config,
                       const EvalOptions& options) {
    Comparison c;
    c.before = run_eval(dataset, before, encoder, oracle, config, options);
    c.after = run_eval(dataset, after, encoder, oracle, config, options);
    c.delta = c.after.mean - c.before.mean;
    return c;
}

} // namespace tkg
