#pragma once

#include <string>

#include <json.hpp>

#include "krri/inference.hpp"
#include "krri/simulation.hpp"

namespace krri {

nlohmann::ordered_json to_json(const ImputationReport& report);
nlohmann::ordered_json to_json(const SimReport& report);

/// Paper-table layout: one row per criterion, one column per method.
void write_sim_table_csv(const std::string& path, const SimReport& report);

/// Per-replicate estimates for external plotting.
void write_sim_replicates_csv(const std::string& path, const SimReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace krri
