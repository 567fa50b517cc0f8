#include <gtest/gtest.h>

#include <fstream>

#include "docent/persona.hpp"
#include "docent/prompt_templates.hpp"

using namespace docent;
using namespace docent::persona;
using nlohmann::json;

namespace {

json example_profile_json() {
    std::ifstream in(std::string(DOCENT_DATA_DIR) + "/persona.example.json");
    return json::parse(in);
}

bool contains(const std::string& hay, std::string_view needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Persona, ShippedProfileValidates) {
    const auto j = example_profile_json();
    EXPECT_TRUE(validate_profile(j).empty());
    const auto p = parse_profile(j);
    EXPECT_EQ(p, default_profile());
    EXPECT_EQ(p.epistemic_authority, EpistemicAuthority::personal);
    EXPECT_EQ(p.expertise_level, ExpertiseLevel::expert);
    EXPECT_EQ(p.narration_perspective, NarrationPerspective::authorial);
    EXPECT_EQ(p.embodiment, Embodiment::abstract);
}

TEST(Persona, EmptyOutputModalitiesIsAViolation) {
    auto j = example_profile_json();
    j["output_modalities"] = json::array();
    const auto v = validate_profile(j);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].str(), "output_modalities: must be non-empty");
    EXPECT_THROW(parse_profile(j), ProfileError);
}

TEST(Persona, UnknownValuesNameTheFieldAndAllowedValues) {
    auto j = example_profile_json();
    j["narration_perspective"] = "omniscient";
    j["input_modalities"] = {"audio", "smell"};
    j["colour"] = "blue";
    j.erase("embodiment");
    const auto v = validate_profile(j);
    ASSERT_EQ(v.size(), 4u);
    std::string all;
    for (const auto& x : v) all += x.str() + "\n";
    EXPECT_TRUE(contains(all, "narration_perspective: unknown value 'omniscient'"));
    EXPECT_TRUE(contains(all, "first_person, third_person, authorial"));
    EXPECT_TRUE(contains(all, "input_modalities"));
    EXPECT_TRUE(contains(all, "colour"));
    EXPECT_TRUE(contains(all, "embodiment: is required"));
}

TEST(Persona, CompilesEveryProfileInTheCrossProduct) {
    std::size_t compiled = 0;
    for (std::size_t a = 0; a < enum_count<ApplicationRealm>(); ++a)
    for (std::size_t u = 0; u < enum_count<UserCategory>(); ++u)
    for (std::size_t o = 0; o < enum_count<OperatorRole>(); ++o)
    for (std::size_t e = 0; e < enum_count<EpistemicAuthority>(); ++e)
    for (std::size_t x = 0; x < enum_count<ExpertiseLevel>(); ++x)
    for (std::size_t n = 0; n < enum_count<NarrationPerspective>(); ++n)
    for (std::size_t b = 0; b < enum_count<Embodiment>(); ++b) {
        PersonaProfile p;
        p.application_realm = static_cast<ApplicationRealm>(a);
        p.user_category = static_cast<UserCategory>(u);
        p.operator_role = static_cast<OperatorRole>(o);
        p.epistemic_authority = static_cast<EpistemicAuthority>(e);
        p.expertise_level = static_cast<ExpertiseLevel>(x);
        p.narration_perspective = static_cast<NarrationPerspective>(n);
        p.embodiment = static_cast<Embodiment>(b);
        ASSERT_TRUE(validate_profile(p).empty());
        const auto c = compile_system_prompt(p);
        ASSERT_TRUE(contains(c.system_prompt, c.refusal_clause));
        ASSERT_FALSE(c.refusal_clause.empty());
        ASSERT_EQ(compile_system_prompt(p).system_prompt, c.system_prompt);
        ASSERT_TRUE(validate_profile(to_json(p)).empty());
        ASSERT_EQ(parse_profile(to_json(p)), p);
        ++compiled;
    }
    EXPECT_EQ(compiled, 4u * 3 * 4 * 3 * 2 * 3 * 3);

    PersonaProfile bad;
    bad.input_modalities.clear();
    EXPECT_FALSE(validate_profile(bad).empty());
    EXPECT_THROW(compile_system_prompt(bad), ProfileError);
}

TEST(Persona, DefaultProfileUsesAuthorialVoiceAndRefuses) {
    const auto c = compile_system_prompt(default_profile());
    EXPECT_TRUE(contains(c.system_prompt, templates::kNarrationAuthorial));
    EXPECT_TRUE(contains(c.system_prompt, templates::kRefusalClause));
    EXPECT_TRUE(contains(c.system_prompt, templates::kExpertiseExpert));
    ASSERT_TRUE(c.criteria_clause.has_value());
    EXPECT_TRUE(contains(*c.criteria_clause, "relevance=main"));
    EXPECT_FALSE(contains(c.system_prompt, *c.criteria_clause));
}

TEST(Persona, FirstPersonBranchDropsAuthorialVoice) {
    PersonaProfile p;
    p.narration_perspective = NarrationPerspective::first_person;
    const auto c = compile_system_prompt(p);
    EXPECT_TRUE(contains(c.system_prompt, templates::kNarrationFirstPerson));
    EXPECT_FALSE(contains(c.system_prompt, templates::kNarrationAuthorial));
}

TEST(Persona, DescriptiveAxesOnlyReachTheManifest) {
    PersonaProfile a, b;
    b.embodiment = Embodiment::human_like;
    b.output_modalities = {Modality::haptics};
    EXPECT_EQ(compile_system_prompt(a).system_prompt, compile_system_prompt(b).system_prompt);
    const auto m = capability_manifest(b);
    EXPECT_EQ(m["embodiment"], "human_like");
    EXPECT_EQ(m["output_modalities"], json::array({"haptics"}));
    EXPECT_EQ(m["template_version"], std::string(templates::kTemplateVersion));
}

TEST(Persona, CollectiveAuthorityAddsAttribution) {
    PersonaProfile p;
    p.epistemic_authority = EpistemicAuthority::collective;
    const auto c = compile_system_prompt(p);
    EXPECT_TRUE(contains(c.system_prompt, templates::kAuthorityNonPersonal));
    EXPECT_TRUE(contains(c.system_prompt, templates::kAuthorityCollectiveAttribution));
}
