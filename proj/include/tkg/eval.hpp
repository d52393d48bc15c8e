#pragma once

// Exact-match QA evaluation over repeated runs, and before/after comparisons
// of two graph snapshots on the same dataset.

#include "json.hpp"
#include "tkg/embed.hpp"
#include "tkg/graph.hpp"
#include "tkg/oracle.hpp"
#include "tkg/reason.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tkg {

struct QAItem {
    std::string id;
    std::string question;
    Timestamp query_time;
    std::vector<std::string> gold_answers;  // aliases
    std::string domain;
    std::vector<std::string> tags;  // e.g. "recovery" for questions that need evolved facts
};

// Dataset JSONL: {id, question, query_time, gold_answers, domain, tags?}.
std::vector<QAItem> load_dataset(std::istream& in);
std::vector<QAItem> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<QAItem>& items, std::ostream& out);

bool is_correct(const std::string& predicted, const std::vector<std::string>& gold_answers);

struct Verdict {
    std::string item_id;
    std::size_t run = 0;
    std::string predicted;  // empty when no answer was produced
    bool correct = false;
    bool no_answer = false;
    double confidence_mass = 0.0;
};

struct EvalReport {
    std::size_t runs = 0;
    std::int64_t seed = 0;
    std::vector<double> per_run_accuracy;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::vector<Verdict> verdicts;  // ordered by run, then item id

    // Mean accuracy restricted to items carrying `tag`; nullopt if none do.
    std::optional<double> accuracy_for(const std::vector<QAItem>& dataset, const std::string& tag) const;
    // Header record, one record per verdict, then a summary record.
    void write_jsonl(std::ostream& out) const;
    nlohmann::json summary() const;
};

// Population mean and standard deviation.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

struct EvalOptions {
    std::size_t runs = 1;
    std::int64_t seed = 0;
    std::size_t jobs = 1;
};

// Answers every item once per run. No-answer outcomes count as incorrect.
// The seed is recorded and offsets any stochastic oracle; the deterministic
// backend ignores it.
EvalReport run_eval(const std::vector<QAItem>& dataset, const GraphStore& store, const Encoder& encoder,
                    const Oracle& oracle, const ReasonerConfig& config, const EvalOptions& options);

struct Comparison {
    EvalReport before;
    EvalReport after;
    double delta = 0.0;  // after.mean - before.mean

    std::string table() const;
};

Comparison compare_kgs(const std::vector<QAItem>& dataset, const GraphStore& before, const GraphStore& after,
                       const Encoder& encoder, const Oracle& oracle, const ReasonerConfig& config,
                       const EvalOptions& options);

} // namespace tkg
