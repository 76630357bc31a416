#include "labcube/subscribers.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "labcube/error.hpp"

namespace labcube {

namespace {

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool all_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

Plmn plmn_from_settings(const SettingsMap& settings) {
  const std::string* mcc = settings.find("MCC");
  const std::string* mnc = settings.find("MNC");
  if (!mcc) throw SchemaError("MCC", "not defined");
  if (!mnc) throw SchemaError("MNC", "not defined");
  if (mcc->size() != 3 || !all_digits(*mcc)) throw SchemaError("MCC", "must be 3 digits");
  if ((mnc->size() != 2 && mnc->size() != 3) || !all_digits(*mnc)) {
    throw SchemaError("MNC", "must be 2 or 3 digits");
  }
  return {*mcc, *mnc};
}

std::vector<SubscriberRecord> parse_subscribers(std::string_view text) {
  const EnvFile env = parse_env_file(text);

  struct Partial {
    std::map<std::string, std::string> fields;
  };
  std::map<int, Partial> partials;
  for (const auto& [key, value] : env.values) {
    if (!key.starts_with("UE")) continue;
    const auto underscore = key.find('_');
    if (underscore == std::string::npos || underscore == 2) continue;
    const std::string index = key.substr(2, underscore - 2);
    if (!all_digits(index) || index.size() > 6) continue;
    const std::string field = key.substr(underscore + 1);
    if (field != "IMSI" && field != "KI" && field != "OPC" && field != "AMF" && field != "MSISDN") {
      continue;
    }
    partials[std::stoi(index)].fields[field] = value;
  }

  std::vector<SubscriberRecord> records;
  for (const auto& [n, partial] : partials) {
    for (const char* field : {"IMSI", "KI", "OPC"}) {
      if (!partial.fields.count(field)) throw IncompleteRecord(n, field);
    }
    SubscriberRecord r;
    r.imsi = partial.fields.at("IMSI");
    r.ki = partial.fields.at("KI");
    r.opc = partial.fields.at("OPC");
    if (auto it = partial.fields.find("AMF"); it != partial.fields.end()) r.amf_field = it->second;
    if (auto it = partial.fields.find("MSISDN"); it != partial.fields.end()) r.msisdn = it->second;
    records.push_back(std::move(r));
  }
  return records;
}

ValidationReport validate_subscriber(const SubscriberRecord& r, const Plmn& plmn) {
  ValidationReport report;
  const std::string subject = r.imsi.empty() ? "<empty>" : r.imsi;
  if (r.imsi.size() != 15) {
    report.add("LENGTH", subject + "/imsi", "IMSI must be 15 digits, got " + std::to_string(r.imsi.size()));
  }
  if (!all_digits(r.imsi)) {
    report.add("CHARSET", subject + "/imsi", "IMSI must contain only decimal digits");
  } else if (r.imsi.size() >= plmn.prefix().size() && !r.imsi.starts_with(plmn.prefix())) {
    report.add("PLMN_MISMATCH", subject + "/imsi",
               "IMSI does not start with PLMN " + plmn.mcc + "/" + plmn.mnc);
  }
  auto check_hex = [&](const std::string& value, std::size_t length, const char* field) {
    if (value.size() != length) {
      report.add("LENGTH", subject + "/" + field,
                 std::string(field) + " must be " + std::to_string(length) + " hex characters");
    }
    if (!all_hex(value)) {
      report.add("CHARSET", subject + "/" + field, std::string(field) + " must be hexadecimal");
    }
  };
  check_hex(r.ki, 32, "ki");
  check_hex(r.opc, 32, "opc");
  check_hex(r.amf_field, 4, "amf");
  if (r.msisdn) {
    if (r.msisdn->empty() || r.msisdn->size() > 15) {
      report.add("LENGTH", subject + "/msisdn", "MSISDN must be 1-15 digits");
    }
    if (!all_digits(*r.msisdn)) report.add("CHARSET", subject + "/msisdn", "MSISDN must be digits");
  }
  return report;
}

SeedSet build_seed_set(std::vector<SubscriberRecord> records, const Plmn& plmn) {
  ValidationReport report;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.imsi).second) throw DuplicateImsi(r.imsi);
    report.append(validate_subscriber(r, plmn));
  }
  if (!report.empty()) throw ValidationFailed(std::move(report));
  return {plmn, std::move(records)};
}

std::string canonical_seed_document(const SeedSet& seeds) {
  std::string doc;
  for (const auto& r : seeds.records) {
    doc += r.imsi + "," + r.ki + "," + r.opc + "," + r.amf_field;
    if (r.msisdn) doc += "," + *r.msisdn;
    doc += "\n";
  }
  return doc;
}

}  // namespace labcube
