#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labcube/report.hpp"
#include "labcube/settings.hpp"

namespace labcube {

struct Plmn {
  std::string mcc;  // 3 digits
  std::string mnc;  // 2 or 3 digits

  std::string prefix() const { return mcc + mnc; }
  bool operator==(const Plmn&) const = default;
};

// Reads MCC and MNC from the settings; the MNC length is taken as written.
// Throws SchemaError when either is missing or malformed.
Plmn plmn_from_settings(const SettingsMap& settings);

struct SubscriberRecord {
  std::string imsi;
  std::string ki;
  std::string opc;
  std::string amf_field = "8000";
  std::optional<std::string> msisdn;

  bool operator==(const SubscriberRecord&) const = default;
};

// Env-format file with UE<n>_IMSI, UE<n>_KI, UE<n>_OPC and optional
// UE<n>_AMF / UE<n>_MSISDN. Records come back ordered by n. Other keys are
// ignored. Throws MalformedLine or IncompleteRecord.
std::vector<SubscriberRecord> parse_subscribers(std::string_view text);

// Findings: LENGTH, CHARSET, PLMN_MISMATCH; the subject names the field.
ValidationReport validate_subscriber(const SubscriberRecord& record, const Plmn& plmn);

struct SeedSet {
  Plmn plmn;
  std::vector<SubscriberRecord> records;

  bool operator==(const SeedSet&) const = default;
};

// Throws DuplicateImsi, or ValidationFailed when a record is invalid.
SeedSet build_seed_set(std::vector<SubscriberRecord> records, const Plmn& plmn);

// One line per record: imsi,ki,opc,amf_field[,msisdn]
std::string canonical_seed_document(const SeedSet& seeds);

}  // namespace labcube
