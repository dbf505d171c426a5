#pragma once

#include <map>
#include <string>

namespace qdspin {

/// Scenario files from configs/, keyed by file stem.
const std::map<std::string, std::string>& bundled_configs();

}  // namespace qdspin
