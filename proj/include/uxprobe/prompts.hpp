#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace uxprobe::prompts {

/// Editable prompt templates loaded from a directory of .txt files.
/// Placeholders are written as {name} and substituted verbatim; the set hash
/// of all templates is recorded into every session log so a run can be tied
/// to the exact prompt text it used.
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);

    /// Substitute {key} placeholders. Unknown placeholders are left intact.
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;

    const std::string& raw(const std::string& name) const;
    const std::string& set_hash() const { return set_hash_; }

    static const std::vector<std::string>& required_templates();

private:
    std::map<std::string, std::string> templates_;
    std::string set_hash_;
};

}  // namespace uxprobe::prompts
