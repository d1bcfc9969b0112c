#pragma once

// File formats: system descriptions, grid strings and JSON reports.

#include "wavestab/ctcr.hpp"
#include "wavestab/mapper.hpp"
#include "wavestab/model.hpp"
#include "wavestab/qs.hpp"
#include "wavestab/smallgain.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace wavestab {

struct NamedSystem {
    std::string name;
    LtiPlant plant;
};

/// {"name": optional string, "A": [[..]..], "B": [..] or [[..]..], "K": [..] or [[..]]}.
/// Throws InputError naming the offending field.
NamedSystem parse_system(const nlohmann::json& doc);
NamedSystem parse_system_text(std::string_view text);
NamedSystem load_system(const std::string& path);

/// "c1=lo:hi:n,tau=lo:hi:n" (or "c0=..,c=.." in (c0, c) mode). Throws InputError.
void parse_grid(std::string_view text, GridSpec& grid);
/// "ctcr,smallgain,qs,sim" plus the QS order list "0,1,2". Throws InputError.
MethodSet parse_methods(std::string_view methods, std::string_view orders);

nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const StabilityAccount& acc);
nlohmann::json to_json(const HinfResult& h);
nlohmann::json to_json(const SmallGainReport& r);
/// Includes the witness {P, Q, R, S, eigen_margins} when the verdict is Stable.
nlohmann::json to_json(const QsReport& r);

}  // namespace wavestab
