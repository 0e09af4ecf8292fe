#pragma once

// File formats: angle-set JSON, the CRPE batch binary, coordinate CSV and
// verification reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "comrope/attention.hpp"
#include "comrope/ropefamily.hpp"
#include "comrope/verify.hpp"

namespace comrope::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Writes content to a sibling temp file, then renames it over path.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// --- angle sets -------------------------------------------------------------

nlohmann::json set_to_json(const AngleMatrixSet& set);
/// Rebuilds the set from its parameters and checks the stored blocks match
/// bit for bit.
AngleMatrixSet set_from_json(const nlohmann::json& doc);

// --- CRPE batches -------------------------------------------------------------
//
// Little-endian: "CRPE", u32 version, u32 n, u32 h, u32 d/h, then Q and K as
// f64 in (n, h, d/h) row-major order.

inline constexpr std::uint32_t kBatchVersion = 1;

void write_batch(std::ostream& os, const attention::AttentionBatch& batch);
attention::AttentionBatch read_batch(std::istream& is);

// --- coordinates ----------------------------------------------------------

/// Header x1,...,xN then one row per token.
void write_coords_csv(std::ostream& os, std::span<const Coordinate> coords);
std::vector<Coordinate> read_coords_csv(std::istream& is);

// --- reports --------------------------------------------------------------

nlohmann::json report_to_json(const verify::VerificationReport& report);
/// Header suite,seed,trials,tol,max_residual,passed.
void write_reports_csv(std::ostream& os, std::span<const verify::VerificationReport> reports);

}  // namespace comrope::io
