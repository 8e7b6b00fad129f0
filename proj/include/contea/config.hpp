#pragma once
#include <cstdint>
#include <filesystem>
#include <string>

namespace contea {

// Pipeline variants: full continual method, the two finetuning ablations,
// and per-snapshot retraining from scratch.
enum class Mode { full, no_ta, no_ta_no_asa, retrain };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

// All run hyperparameters. Defaults follow the declared artifact defaults;
// everything is overridable from a config file or key=value CLI arguments.
struct RunConfig {
    int dim = 100;              // embedding dimension d
    double alpha = 0.1;         // weight on the reconstruction loss
    double beta = 0.1;          // weight on the trustworthy-alignment replay loss
    int m = 500;                // top-m trustworthy alignment replayed at finetune
    double gamma = 15.0;        // scale factor in the alignment loss
    double lambda = 0.5;        // margin in the alignment loss
    int proxy_count = 64;       // number of proxy nodes K
    int csls_k = 10;            // neighborhood size for CSLS
    int batch_size = 512;       // alignment pairs per training batch
    double lr = 1e-3;           // Adam learning rate
    int epochs = 300;           // max epochs for initial training
    int finetune_epochs = 75;   // max epochs per finetuning phase
    int patience = 5;           // early-stop patience, counted in evaluations
    int eval_every = 5;         // validation cadence in epochs
    std::uint64_t seed = 42;
    Mode mode = Mode::full;

    void validate() const;      // throws Error on out-of-range values
};

// Line-oriented key=value config files, '#' starts a comment.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

// Applies a single "key=value" override; throws Error for unknown keys or
// values that do not parse as the field's type.
void apply_override(RunConfig& config, const std::string& key_value);

} // namespace contea
