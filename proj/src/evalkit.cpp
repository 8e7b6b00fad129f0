#include "contea/evalkit.hpp"

#include <cstdio>
#include <set>

#include "contea/error.hpp"

namespace contea {

namespace {

Metrics score_counts(std::size_t correct, std::size_t predicted, std::size_t gold) {
    Metrics m;
    m.correct_count = static_cast<long>(correct);
    m.precision = predicted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted);
    m.recall = static_cast<double>(correct) / static_cast<double>(gold);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

} // namespace

Metrics evaluate(const TrustworthyAlignment& predicted, const std::vector<AlignPair>& gold) {
    if (gold.empty()) throw Error("empty gold set error");
    std::set<AlignPair> gold_set(gold.begin(), gold.end());
    std::size_t correct = 0;
    for (const ScoredPair& p : predicted.pairs) {
        if (gold_set.contains({p.e1, p.e2})) ++correct;
    }
    return score_counts(correct, predicted.size(), gold_set.size());
}

std::optional<double> new_entity_recall(const TrustworthyAlignment& predicted,
                                        const std::vector<AlignPair>& gold,
                                        const NewEntities& new_entities) {
    std::set<AlignPair> gold_new;
    for (const AlignPair& p : gold) {
        if (new_entities.contains(p)) gold_new.insert(p);
    }
    if (gold_new.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (const ScoredPair& p : predicted.pairs) {
        AlignPair key{p.e1, p.e2};
        if (new_entities.contains(key) && gold_new.contains(key)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(gold_new.size());
}

Metrics evaluate_name_pairs(const std::vector<std::pair<std::string, std::string>>& predicted,
                            const std::vector<std::pair<std::string, std::string>>& gold) {
    if (gold.empty()) throw Error("empty gold set error");
    std::set<std::pair<std::string, std::string>> gold_set(gold.begin(), gold.end());
    std::set<std::pair<std::string, std::string>> pred_set(predicted.begin(), predicted.end());
    std::size_t correct = 0;
    for (const auto& p : pred_set) {
        if (gold_set.contains(p)) ++correct;
    }
    return score_counts(correct, pred_set.size(), gold_set.size());
}

void emit_report(const RunRecord& record, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("output error: cannot create " + out_dir.string());

    auto open = [&](const char* name) {
        std::FILE* f = std::fopen((out_dir / name).string().c_str(), "wb");
        if (f == nullptr) throw Error(std::string("output error: cannot write ") + name + " under " +
                                      out_dir.string());
        return f;
    };

    std::FILE* metrics = open("metrics.csv");
    std::fprintf(metrics, "snapshot,mode,precision,recall,f1,new_entity_recall,wall_time_s,ta_size\n");
    for (const SnapshotRecord& s : record.snapshots) {
        char ner[32];
        if (s.metrics.new_entity_recall.has_value()) {
            std::snprintf(ner, sizeof(ner), "%.6f", *s.metrics.new_entity_recall);
        } else {
            std::snprintf(ner, sizeof(ner), "NA");
        }
        std::fprintf(metrics, "%d,%s,%.6f,%.6f,%.6f,%s,%.3f,%zu\n", s.t, mode_name(s.mode).c_str(),
                     s.metrics.precision, s.metrics.recall, s.metrics.f1, ner, s.wall_time_s,
                     s.ta_size);
    }
    std::fclose(metrics);

    std::FILE* growth = open("growth.csv");
    std::fprintf(growth, "snapshot,correct_alignment_count\n");
    for (const SnapshotRecord& s : record.snapshots) {
        std::fprintf(growth, "%d,%ld\n", s.t, s.metrics.correct_count);
    }
    std::fclose(growth);
}

} // namespace contea
