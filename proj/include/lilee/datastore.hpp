#pragma once

#include "lilee/error.hpp"
#include "lilee/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lilee {

/// Everything that can be written as a parameter file. Each alternative has a
/// schema named after the type (`#schema:<TypeName> v1`).
using Document = std::variant<BaselineModel, CovidLayer, SeasonalEffect, CodaFit, AnnualPanel, WeeklyPanel,
                              WeeklyDeaths, ScenarioForecast>;

/// Extra `#key=value` header lines, e.g. the configuration hash of the run
/// that produced the file. Ignored on load.
using Provenance = std::vector<std::pair<std::string, std::string>>;

/// Writes `doc` as line-oriented CSV: a schema line, `#key=value` metadata,
/// the column header `key,index1,index2,value`, then one row per value with
/// 17 significant digits. The parent directory must already exist.
void save_model(const Document &doc, const std::filesystem::path &path, const Provenance &provenance = {});

/// Serialises to a string instead of a file.
std::string serialize(const Document &doc, const Provenance &provenance = {});

/// Parses and re-validates a parameter file. Throws ParseError naming the
/// first offending line, or ValidationError naming the broken invariant.
Document load_model(const std::filesystem::path &path);
Document deserialize(const std::string &text, const std::string &source = "<string>");

template <typename T>
T load_as(const std::filesystem::path &path) {
    auto doc = load_model(path);
    if (auto *value = std::get_if<T>(&doc)) {
        return std::move(*value);
    }
    throw ValidationError("schema", path.string() + " holds a different document type");
}

std::string schema_name(const Document &doc);

/// Writes a plain CSV table with a header row; used for logs and plot data.
void write_table(const std::filesystem::path &path, const std::vector<std::string> &header,
                 const std::vector<std::vector<std::string>> &rows, const Provenance &provenance = {});

std::string format_double(double value);

} // namespace lilee
