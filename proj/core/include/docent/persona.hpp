#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/error.hpp"

namespace docent::persona {

enum class ApplicationRealm { collection_management, conservation, research, presentation };
enum class UserCategory { individuals, organisations, nations };
enum class OperatorRole { curator, developer, provider, user };
enum class EpistemicAuthority { personal, non_personal, collective };
enum class ExpertiseLevel { semi_expert, expert };
enum class NarrationPerspective { first_person, third_person, authorial };
enum class Embodiment { human_like, bodiless, abstract };
enum class Modality { visuals, audio, haptics, proprioception };

/// Lowercase wire names, in declaration order.
template <typename E>
struct EnumNames;

#define DOCENT_ENUM_NAMES(E, ...)                                                   \
    template <>                                                                     \
    struct EnumNames<E> {                                                           \
        static constexpr auto values = std::to_array<std::string_view>({__VA_ARGS__}); \
    };

DOCENT_ENUM_NAMES(ApplicationRealm, "collection_management", "conservation", "research", "presentation")
DOCENT_ENUM_NAMES(UserCategory, "individuals", "organisations", "nations")
DOCENT_ENUM_NAMES(OperatorRole, "curator", "developer", "provider", "user")
DOCENT_ENUM_NAMES(EpistemicAuthority, "personal", "non_personal", "collective")
DOCENT_ENUM_NAMES(ExpertiseLevel, "semi_expert", "expert")
DOCENT_ENUM_NAMES(NarrationPerspective, "first_person", "third_person", "authorial")
DOCENT_ENUM_NAMES(Embodiment, "human_like", "bodiless", "abstract")
DOCENT_ENUM_NAMES(Modality, "visuals", "audio", "haptics", "proprioception")

#undef DOCENT_ENUM_NAMES

template <typename E>
constexpr std::string_view to_string(E value) {
    return EnumNames<E>::values[static_cast<std::size_t>(value)];
}

template <typename E>
constexpr std::optional<E> parse_enum(std::string_view s) {
    const auto& names = EnumNames<E>::values;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

template <typename E>
constexpr std::size_t enum_count() {
    return EnumNames<E>::values.size();
}

/// One selection through the avatar requirement space.
struct PersonaProfile {
    ApplicationRealm application_realm = ApplicationRealm::presentation;
    UserCategory user_category = UserCategory::individuals;
    OperatorRole operator_role = OperatorRole::user;
    EpistemicAuthority epistemic_authority = EpistemicAuthority::personal;
    ExpertiseLevel expertise_level = ExpertiseLevel::expert;
    NarrationPerspective narration_perspective = NarrationPerspective::authorial;
    Embodiment embodiment = Embodiment::abstract;
    std::set<Modality> input_modalities = {Modality::audio};
    std::set<Modality> output_modalities = {Modality::audio, Modality::visuals};

    bool operator==(const PersonaProfile&) const = default;
};

/// The presentation guide used by the reference deployment: a personal,
/// expert-level avatar with authorial narration, abstract embodiment, audio
/// input and audio plus minimal visual output.
PersonaProfile default_profile();

struct Violation {
    std::string field;
    std::string message;

    std::string str() const { return field + ": " + message; }
    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_profile(const PersonaProfile& profile);

/// Validates a raw profile document: missing fields, wrong types, values
/// outside the enumerations, unknown keys and empty modality sets.
std::vector<Violation> validate_profile(const nlohmann::json& j);

class ProfileError : public ConfigError {
public:
    explicit ProfileError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Throws ProfileError listing every violation.
PersonaProfile parse_profile(const nlohmann::json& j);
nlohmann::json to_json(const PersonaProfile& p);

struct CompiledPrompt {
    std::string system_prompt;
    std::string refusal_clause;
    std::optional<std::string> criteria_clause;
};

/// Deterministic; throws ProfileError for an invalid profile.
CompiledPrompt compile_system_prompt(const PersonaProfile& profile);

/// Descriptive axes with no effect on the text pipeline, for front ends.
nlohmann::json capability_manifest(const PersonaProfile& profile);

}  // namespace docent::persona
