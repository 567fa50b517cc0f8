#include "docent/persona.hpp"

#include <sstream>

#include "docent/prompt_templates.hpp"

namespace docent::persona {

namespace tpl = docent::templates;

PersonaProfile default_profile() { return PersonaProfile{}; }

std::vector<Violation> validate_profile(const PersonaProfile& profile) {
    std::vector<Violation> out;
    if (profile.input_modalities.empty()) out.push_back({"input_modalities", "must be non-empty"});
    if (profile.output_modalities.empty()) out.push_back({"output_modalities", "must be non-empty"});
    return out;
}

namespace {

template <typename E>
std::string allowed_list() {
    std::string s;
    for (auto name : EnumNames<E>::values) {
        if (!s.empty()) s += ", ";
        s += name;
    }
    return s;
}

template <typename E>
std::optional<E> check_enum_field(const nlohmann::json& j, const char* field, std::vector<Violation>& out) {
    if (!j.contains(field)) {
        out.push_back({field, "is required"});
        return std::nullopt;
    }
    const auto& v = j.at(field);
    if (!v.is_string()) {
        out.push_back({field, "must be a string (allowed: " + allowed_list<E>() + ")"});
        return std::nullopt;
    }
    auto parsed = parse_enum<E>(v.get<std::string>());
    if (!parsed) {
        out.push_back({field, "unknown value '" + v.get<std::string>() + "' (allowed: " + allowed_list<E>() + ")"});
    }
    return parsed;
}

std::optional<std::set<Modality>> check_modalities(const nlohmann::json& j, const char* field,
                                                   std::vector<Violation>& out) {
    if (!j.contains(field)) {
        out.push_back({field, "is required"});
        return std::nullopt;
    }
    const auto& v = j.at(field);
    if (!v.is_array()) {
        out.push_back({field, "must be an array of modalities"});
        return std::nullopt;
    }
    std::set<Modality> set;
    bool ok = true;
    for (const auto& item : v) {
        const auto parsed = item.is_string() ? parse_enum<Modality>(item.get<std::string>()) : std::nullopt;
        if (!parsed) {
            out.push_back({field, "unknown value " + item.dump() + " (allowed: " + allowed_list<Modality>() + ")"});
            ok = false;
            continue;
        }
        set.insert(*parsed);
    }
    if (v.empty()) {
        out.push_back({field, "must be non-empty"});
        ok = false;
    }
    if (!ok) return std::nullopt;
    return set;
}

constexpr const char* kKnownKeys[] = {"application_realm",     "user_category", "operator_role",
                                      "epistemic_authority",   "expertise_level", "narration_perspective",
                                      "embodiment",            "input_modalities", "output_modalities",
                                      "name"};

struct Checked {
    std::vector<Violation> violations;
    PersonaProfile profile;
};

Checked check(const nlohmann::json& j) {
    Checked c;
    if (!j.is_object()) {
        c.violations.push_back({"profile", "must be a JSON object"});
        return c;
    }
    auto& out = c.violations;
    auto& p = c.profile;
    if (auto v = check_enum_field<ApplicationRealm>(j, "application_realm", out)) p.application_realm = *v;
    if (auto v = check_enum_field<UserCategory>(j, "user_category", out)) p.user_category = *v;
    if (auto v = check_enum_field<OperatorRole>(j, "operator_role", out)) p.operator_role = *v;
    if (auto v = check_enum_field<EpistemicAuthority>(j, "epistemic_authority", out)) p.epistemic_authority = *v;
    if (auto v = check_enum_field<ExpertiseLevel>(j, "expertise_level", out)) p.expertise_level = *v;
    if (auto v = check_enum_field<NarrationPerspective>(j, "narration_perspective", out)) p.narration_perspective = *v;
    if (auto v = check_enum_field<Embodiment>(j, "embodiment", out)) p.embodiment = *v;
    if (auto v = check_modalities(j, "input_modalities", out)) p.input_modalities = *v;
    if (auto v = check_modalities(j, "output_modalities", out)) p.output_modalities = *v;

    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : kKnownKeys) known = known || key == k;
        if (!known) out.push_back({key, "unknown field"});
    }
    return c;
}

}  // namespace

std::vector<Violation> validate_profile(const nlohmann::json& j) { return check(j).violations; }

namespace {

std::string join_violations(const std::vector<Violation>& v) {
    std::string s = "invalid persona profile";
    for (const auto& x : v) s += "; " + x.str();
    return s;
}

}  // namespace

ProfileError::ProfileError(std::vector<Violation> violations)
    : ConfigError(join_violations(violations)), violations_(std::move(violations)) {}

PersonaProfile parse_profile(const nlohmann::json& j) {
    auto c = check(j);
    if (!c.violations.empty()) throw ProfileError(std::move(c.violations));
    return c.profile;
}

nlohmann::json to_json(const PersonaProfile& p) {
    auto modalities = [](const std::set<Modality>& s) {
        nlohmann::json arr = nlohmann::json::array();
        for (auto m : s) arr.push_back(std::string(to_string(m)));
        return arr;
    };
    return nlohmann::json{{"application_realm", std::string(to_string(p.application_realm))},
                          {"user_category", std::string(to_string(p.user_category))},
                          {"operator_role", std::string(to_string(p.operator_role))},
                          {"epistemic_authority", std::string(to_string(p.epistemic_authority))},
                          {"expertise_level", std::string(to_string(p.expertise_level))},
                          {"narration_perspective", std::string(to_string(p.narration_perspective))},
                          {"embodiment", std::string(to_string(p.embodiment))},
                          {"input_modalities", modalities(p.input_modalities)},
                          {"output_modalities", modalities(p.output_modalities)}};
}

namespace {

std::string_view realm_sentence(ApplicationRealm r) {
    switch (r) {
        case ApplicationRealm::collection_management: return tpl::kRealmCollectionManagement;
        case ApplicationRealm::conservation: return tpl::kRealmConservation;
        case ApplicationRealm::research: return tpl::kRealmResearch;
        case ApplicationRealm::presentation: return tpl::kRealmPresentation;
    }
    return tpl::kRealmPresentation;
}

std::string_view users_sentence(UserCategory u) {
    switch (u) {
        case UserCategory::individuals: return tpl::kUsersIndividuals;
        case UserCategory::organisations: return tpl::kUsersOrganisations;
        case UserCategory::nations: return tpl::kUsersNations;
    }
    return tpl::kUsersIndividuals;
}

std::string_view operator_sentence(OperatorRole o) {
    switch (o) {
        case OperatorRole::curator: return tpl::kOperatorCurator;
        case OperatorRole::developer: return tpl::kOperatorDeveloper;
        case OperatorRole::provider: return tpl::kOperatorProvider;
        case OperatorRole::user: return tpl::kOperatorUser;
    }
    return tpl::kOperatorUser;
}

std::string_view narration_sentence(NarrationPerspective n) {
    switch (n) {
        case NarrationPerspective::first_person: return tpl::kNarrationFirstPerson;
        case NarrationPerspective::third_person: return tpl::kNarrationThirdPerson;
        case NarrationPerspective::authorial: return tpl::kNarrationAuthorial;
    }
    return tpl::kNarrationAuthorial;
}

}  // namespace

CompiledPrompt compile_system_prompt(const PersonaProfile& profile) {
    if (auto v = validate_profile(profile); !v.empty()) throw ProfileError(std::move(v));

    std::vector<std::string_view> parts;
    switch (profile.epistemic_authority) {
        case EpistemicAuthority::personal: parts.push_back(tpl::kAuthorityPersonal); break;
        case EpistemicAuthority::non_personal: parts.push_back(tpl::kAuthorityNonPersonal); break;
        case EpistemicAuthority::collective:
            parts.push_back(tpl::kAuthorityNonPersonal);
            parts.push_back(tpl::kAuthorityCollectiveAttribution);
            break;
    }
    parts.push_back(profile.expertise_level == ExpertiseLevel::expert ? tpl::kExpertiseExpert
                                                                      : tpl::kExpertiseSemiExpert);
    parts.push_back(narration_sentence(profile.narration_perspective));
    parts.push_back(realm_sentence(profile.application_realm));
    parts.push_back(users_sentence(profile.user_category));
    parts.push_back(operator_sentence(profile.operator_role));
    parts.push_back(tpl::kGrounding);
    parts.push_back(tpl::kRefusalClause);

    CompiledPrompt out;
    for (auto p : parts) {
        if (!out.system_prompt.empty()) out.system_prompt += ' ';
        out.system_prompt += p;
    }
    out.refusal_clause = std::string(tpl::kRefusalClause);
    out.criteria_clause = std::string(tpl::kCriteriaClause);
    return out;
}

nlohmann::json capability_manifest(const PersonaProfile& profile) {
    const auto full = to_json(profile);
    return nlohmann::json{{"template_version", std::string(tpl::kTemplateVersion)},
                          {"embodiment", full["embodiment"]},
                          {"input_modalities", full["input_modalities"]},
                          {"output_modalities", full["output_modalities"]},
                          {"narration_perspective", full["narration_perspective"]},
                          {"epistemic_authority", full["epistemic_authority"]}};
}

}  // namespace docent::persona
