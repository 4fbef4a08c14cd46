#pragma once

#include <json.hpp>
#include <string>

#include "nsdual/applications.hpp"
#include "nsdual/probes.hpp"

namespace nsdual {

using Json = nlohmann::json;

/// JSON-safe number: non-finite values serialize as strings so the reports
/// stay parseable and byte-stable.
Json json_num(double v);

Json to_json(const ElasticityEstimate& e);
Json to_json(const AdmissibilityReport& a);
Json to_json(const DualityDiagnostics& d);
Json to_json(const DualSolveResult& d);
Json to_json(const PrimalSolveResult& p);
Json to_json(const SolveReport& r);
Json to_json(const LadderResult& l);
Json to_json(const UniquenessReport& u);
Json to_json(const ClassAuditReport& a);
Json to_json(const ShortfallResult& s);
Json to_json(const IndifferenceResult& i);

/// Shortest exact decimal form used in all CSV output.
std::string format_g17(double v);

/// Write-to-temp then rename, so partially written files never appear.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace nsdual
