#pragma once

#include <ostream>
#include <string>

#include "geoseg/config.hpp"

namespace geoseg {

inline constexpr const char* kToolVersion = "geoseg 0.1.0";

enum class Stage {
    WORLD,
    SAMPLE,
    PAIRS,
    PRETRAIN,
    FINETUNE,
    EVAL,
    BORDERS,
    REPORT,
};

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& s);

// FNV-1a 64 over the file contents; throws if the file is unreadable.
uint64_t hash_file(const std::string& path);

// Runs gen-world -> sample -> pairs -> pretrain -> finetune -> eval ->
// borders -> report into out_dir, stopping after `stop_after`. Stages whose
// inputs (config + upstream artifacts) are unchanged since a previous run
// are skipped. Errors are rethrown with the stage name prefixed.
void run_pipeline(const RunConfig& config, const std::string& out_dir,
                  Stage stop_after = Stage::REPORT, std::ostream* log = nullptr);

}  // namespace geoseg
