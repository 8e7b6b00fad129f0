#include "contea/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "contea/config.hpp"
#include "contea/continual.hpp"
#include "contea/encoder.hpp"
#include "contea/error.hpp"
#include "contea/evalkit.hpp"
#include "contea/kg_store.hpp"
#include "contea/log.hpp"
#include "contea/snapgen.hpp"

namespace contea {

namespace {

const char* kUsage =
    "usage: contea <subcommand> [flags] [key=value overrides]\n"
    "\n"
    "subcommands:\n"
    "  gen     generate a synthetic growing-KG benchmark\n"
    "          flags: --out DIR  overrides: n_entities=, n_relations=, avg_degree=,\n"
    "          overlap_ratio=, structural_noise=, n_snapshots=, growth_ratio=,\n"
    "          split_train=, split_valid=, split_test=, seed=\n"
    "  train   train on the first snapshot only (t=0)\n"
    "          flags: --snapshots DIR [--config FILE] [--out DIR] [--seed N] [--threads N]\n"
    "  run     run the continual pipeline over a snapshot sequence\n"
    "          flags: --snapshots DIR,DIR,... [--mode full|no_ta|no_ta_no_asa|retrain]\n"
    "          [--config FILE] [--out DIR] [--seed N] [--threads N]\n"
    "  eval    score an exported alignment file against gold links\n"
    "          flags: --pred FILE --gold FILE\n"
    "  export  recompute and dump the trustworthy alignment of a checkpoint\n"
    "          flags: --checkpoint FILE --snapshots DIR --out FILE [--threads N]\n"
    "\n"
    "RunConfig overrides (train/run/export): dim=, alpha=, beta=, m=, gamma=, lambda=,\n"
    "  proxy_count=, csls_k=, batch_size=, lr=, epochs=, finetune_epochs=, patience=,\n"
    "  eval_every=, seed=, mode=\n"
    "environment: CONTEA_LOG=quiet|info|debug\n";

struct ParsedArgs {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> flags; // --name value
    std::vector<std::string> overrides;                     // key=value
    bool help = false;
};

const std::vector<std::string> kKnownFlags = {
    "--snapshots", "--config", "--mode", "--out", "--seed", "--threads",
    "--pred", "--gold", "--checkpoint",
};

ParsedArgs parse_args(const std::vector<std::string>& args) {
    ParsedArgs parsed;
    std::size_t i = 0;
    if (i < args.size() && args[i] != "--help" && args[i] != "-h") {
        parsed.subcommand = args[i];
        ++i;
    }
    for (; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--help" || a == "-h") {
            parsed.help = true;
            continue;
        }
        if (a.rfind("--", 0) == 0) {
            bool known = false;
            for (const auto& f : kKnownFlags) known = known || f == a;
            if (!known) throw Error("usage error: unknown flag '" + a + "'");
            if (i + 1 >= args.size()) throw Error("usage error: flag '" + a + "' needs a value");
            parsed.flags.emplace_back(a, args[++i]);
        } else if (a.find('=') != std::string::npos) {
            parsed.overrides.push_back(a);
        } else {
            throw Error("usage error: unexpected argument '" + a + "'");
        }
    }
    return parsed;
}

std::optional<std::string> flag_value(const ParsedArgs& parsed, const std::string& name) {
    std::optional<std::string> value;
    for (const auto& [flag, v] : parsed.flags) {
        if (flag == name) value = v;
    }
    return value;
}

std::vector<std::filesystem::path> split_dirs(const std::string& list) {
    std::vector<std::filesystem::path> dirs;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t pos = list.find(',', start);
        std::string part =
            pos == std::string::npos ? list.substr(start) : list.substr(start, pos - start);
        if (!part.empty()) dirs.emplace_back(part);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return dirs;
}

void apply_threads(const ParsedArgs& parsed) {
    auto threads = flag_value(parsed, "--threads");
    if (!threads) return;
    int n = 0;
    try {
        n = std::stoi(*threads);
    } catch (const std::exception&) {
        throw Error("usage error: --threads expects an integer");
    }
    if (n < 1) throw Error("usage error: --threads must be >= 1");
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    if (n > 1) log_info("built without OpenMP; --threads ignored");
#endif
}

RunConfig build_config(const ParsedArgs& parsed) {
    RunConfig config;
    if (auto file = flag_value(parsed, "--config")) config = load_config_file(*file, config);
    for (const std::string& kv : parsed.overrides) apply_override(config, kv);
    if (auto seed = flag_value(parsed, "--seed")) apply_override(config, "seed=" + *seed);
    if (auto mode = flag_value(parsed, "--mode")) config.mode = parse_mode(*mode);
    config.validate();
    return config;
}

std::vector<std::pair<std::string, std::string>> read_name_pairs(const std::filesystem::path& path,
                                                                 std::size_t min_fields) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("dataset layout error: cannot open " + path.string());
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.eof()) break;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find('\t', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields.size() < min_fields || fields[0].empty() || fields[1].empty()) {
            throw Error("parse error: " + path.filename().string() + " line " +
                        std::to_string(line_no) + ": expected at least " +
                        std::to_string(min_fields) + " tab-separated fields");
        }
        pairs.emplace_back(fields[0], fields[1]);
    }
    return pairs;
}

int cmd_gen(const ParsedArgs& parsed) {
    auto out = flag_value(parsed, "--out");
    if (!out) throw Error("usage error: gen requires --out DIR");
    GenSpec spec;
    for (const std::string& kv : parsed.overrides) apply_genspec_override(spec, kv);
    if (auto seed = flag_value(parsed, "--seed")) apply_genspec_override(spec, "seed=" + *seed);
    spec.validate();
    auto dirs = generate_to_directory(spec, *out);
    std::printf("generated %zu snapshots under %s\n", dirs.size(),
                (std::filesystem::path(*out) / "snapshots").string().c_str());
    return 0;
}

int cmd_run(const ParsedArgs& parsed, bool first_only) {
    auto snapshots = flag_value(parsed, "--snapshots");
    if (!snapshots) throw Error("usage error: --snapshots DIR[,DIR...] is required");
    auto dirs = split_dirs(*snapshots);
    if (dirs.empty()) throw Error("usage error: --snapshots needs at least one directory");
    if (first_only) dirs.resize(1);
    apply_threads(parsed);
    RunConfig config = build_config(parsed);

    std::filesystem::path out_dir;
    if (auto out = flag_value(parsed, "--out")) out_dir = *out;
    RunRecord record = run_pipeline(dirs, config, out_dir);
    for (const SnapshotRecord& s : record.snapshots) {
        std::printf("t=%d mode=%s precision=%.6f recall=%.6f f1=%.6f ta=%zu wall=%.3fs\n", s.t,
                    mode_name(s.mode).c_str(), s.metrics.precision, s.metrics.recall, s.metrics.f1,
                    s.ta_size, s.wall_time_s);
    }
    return 0;
}

int cmd_eval(const ParsedArgs& parsed) {
    auto pred = flag_value(parsed, "--pred");
    auto gold = flag_value(parsed, "--gold");
    if (!pred || !gold) throw Error("usage error: eval requires --pred FILE and --gold FILE");
    auto pred_pairs = read_name_pairs(*pred, 2);
    auto gold_pairs = read_name_pairs(*gold, 2);
    Metrics m = evaluate_name_pairs(pred_pairs, gold_pairs);
    std::printf("precision=%.6f recall=%.6f f1=%.6f correct=%ld predicted=%zu gold=%zu\n",
                m.precision, m.recall, m.f1, m.correct_count, pred_pairs.size(), gold_pairs.size());
    return 0;
}

int cmd_export(const ParsedArgs& parsed) {
    auto checkpoint = flag_value(parsed, "--checkpoint");
    auto snapshots = flag_value(parsed, "--snapshots");
    auto out = flag_value(parsed, "--out");
    if (!checkpoint || !snapshots || !out) {
        throw Error("usage error: export requires --checkpoint FILE, --snapshots DIR and --out FILE");
    }
    apply_threads(parsed);
    RunConfig config = build_config(parsed);

    auto dirs = split_dirs(*snapshots);
    if (dirs.size() != 1) throw Error("usage error: export expects exactly one snapshot directory");
    auto [pair, aligns] = load_snapshot(dirs[0]);
    EncoderState state = load_checkpoint(*checkpoint);
    if (state.base_emb.rows() != pair.total_entities()) {
        throw Error("checkpoint error: checkpoint covers " + std::to_string(state.base_emb.rows()) +
                    " entities but snapshot has " + std::to_string(pair.total_entities()));
    }
    if (state.rel_emb.rows() != pair.total_relations()) {
        throw Error("checkpoint error: checkpoint covers " + std::to_string(state.rel_emb.rows()) +
                    " relations but snapshot has " + std::to_string(pair.total_relations()));
    }
    EmbeddingMatrix emb = encode_all(state, pair);
    TrustworthyAlignment ta = search_alignment(emb, pair, aligns, config, pair.t);
    write_alignment_tsv(ta, pair, *out);
    std::printf("exported %zu alignment pairs to %s\n", ta.size(), out->c_str());
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    ParsedArgs parsed;
    try {
        parsed = parse_args(args);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        std::fputs(kUsage, stderr);
        return 2;
    }

    if (parsed.help) {
        std::fputs(kUsage, stdout);
        return 0;
    }
    if (parsed.subcommand.empty()) {
        std::fputs(kUsage, stderr);
        return 2;
    }

    try {
        if (parsed.subcommand == "gen") return cmd_gen(parsed);
        if (parsed.subcommand == "train") return cmd_run(parsed, true);
        if (parsed.subcommand == "run") return cmd_run(parsed, false);
        if (parsed.subcommand == "eval") return cmd_eval(parsed);
        if (parsed.subcommand == "export") return cmd_export(parsed);
    } catch (const Error& e) {
        std::string msg = e.what();
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return msg.rfind("usage error", 0) == 0 ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    std::fprintf(stderr, "error: unknown subcommand '%s'\n", parsed.subcommand.c_str());
    std::fputs(kUsage, stderr);
    return 2;
}

} // namespace contea
