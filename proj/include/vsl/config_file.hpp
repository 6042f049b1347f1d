#ifndef VSL_CONFIG_FILE_HPP_
#define VSL_CONFIG_FILE_HPP_

#include <map>
#include <set>
#include <string>

namespace vsl {

/// Parses a plain-text "key = value" config file, one pair per line.
/// '#' starts a comment; blank lines are ignored; a later line overrides an
/// earlier one. Keys outside known_keys are rejected with the offending
/// line number.
std::map<std::string, std::string> parse_config_file(const std::string& path,
                                                     const std::set<std::string>& known_keys);

}  // namespace vsl

#endif  // VSL_CONFIG_FILE_HPP_
