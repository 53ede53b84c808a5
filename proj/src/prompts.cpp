#include "uxprobe/prompts.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <cstdio>

namespace uxprobe::prompts {

const std::vector<std::string>& PromptLibrary::required_templates() {
    static const std::vector<std::string> names = {
        "core_system",       "step_eval",       "sus_synthesis", "checklist_generate",
        "checklist_update",  "eip_search",      "policy_constraints",
    };
    return names;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (const std::string& name : required_templates()) {
        std::filesystem::path file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) {
            throw ConfigError("missing prompt template: " + file.string());
        }
        lib.templates_[name] = util::read_file(file);
    }
    std::string all;
    for (const auto& [name, text] : lib.templates_) {
        all += name;
        all.push_back('\0');
        all += text;
        all.push_back('\0');
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(util::fnv1a64(all)));
    lib.set_hash_ = buf;
    return lib;
}

const std::string& PromptLibrary::raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
    std::string out = raw(name);
    for (const auto& [key, value] : vars) {
        std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

}  // namespace uxprobe::prompts
