// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "backdrop/conditioning/conditioning.hpp"
#include "backdrop/conditioning/prompts.hpp"
#include "backdrop/eval/metrics.hpp"
#include "backdrop/toy/scenes.hpp"

using namespace backdrop;
using namespace backdrop::cond;

namespace {

ObjectMask mask_from(std::initializer_list<std::initializer_list<int>> rows) {
    const int H = static_cast<int>(rows.size());
    const int W = static_cast<int>(rows.begin()->size());
    ObjectMask m;
    m.values = Tensor<uint8_t>::zeros({H, W});
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (int v : row) m.values[static_cast<size_t>(y) * W + x++] = static_cast<uint8_t>(v);
        ++y;
    }
    return m;
}

bool subset_of(const ObjectMask& a, const ObjectMask& b) {
    for (size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] && !b.values[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("mask dilation") {
    SUBCASE("radius zero is the identity") {
        const auto m = mask_from({{0, 1, 0}, {1, 1, 0}, {0, 0, 0}});
        const auto d = dilate_mask(m, 0);
        CHECK(std::memcmp(d.values.data(), m.values.data(), m.values.size()) == 0);
    }
    SUBCASE("single pixel grows to the 3x3 block") {
        ObjectMask m;
        m.values = Tensor<uint8_t>::zeros({5, 5});
        m.values[2 * 5 + 2] = 1;
        const auto d = dilate_mask(m, 1);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                const bool in_block = std::abs(y - 2) <= 1 && std::abs(x - 2) <= 1;
                CHECK(d.values[static_cast<size_t>(y) * 5 + x] == (in_block ? 1 : 0));
            }
        CHECK(d.dilation_radius == 1);
    }
    SUBCASE("monotone in the radius and never shrinks") {
        Rng rng(12);
        for (int trial = 0; trial < 30; ++trial) {
            ObjectMask m;
            m.values = Tensor<uint8_t>::zeros({16, 16});
            for (size_t i = 0; i < m.values.size(); ++i) m.values[i] = rng.uniform() < 0.15 ? 1 : 0;
            const int r1 = rng.uniform_int(0, 3), r2 = r1 + rng.uniform_int(0, 3);
            const auto d1 = dilate_mask(m, r1);
            const auto d2 = dilate_mask(m, r2);
            CHECK(subset_of(m, d1));
            CHECK(subset_of(d1, d2));
        }
    }
    SUBCASE("negative radius rejected") {
        CHECK_THROWS_AS(dilate_mask(mask_from({{1}}), -1), ValidationError);
    }
}

TEST_CASE("mask downsampling averages boxes") {
    ObjectMask m;
    m.values = Tensor<uint8_t>::zeros({4, 4});
    // Top-left 2x2 box fully on, top-right half on.
    m.values[0] = m.values[1] = m.values[4] = m.values[5] = 1;
    m.values[2] = m.values[6] = 1;
    const Tensorf d = downsample_mask(m, 2);
    CHECK(d.at(0, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(d.at(0, 0, 0, 1) == doctest::Approx(0.5));
    CHECK(d.at(0, 0, 1, 0) == doctest::Approx(0.0));
}

TEST_CASE("prompt templates and the shipped suite") {
    const auto suite = load_prompt_suite(std::string(BACKDROP_DATA_DIR) + "/prompts/default_prompts.txt");
    REQUIRE(suite.templates.size() == 10);

    SUBCASE("class label template renders the class name") {
        const auto* t = suite.find("class_label");
        REQUIRE(t != nullptr);
        CHECK(render_prompt(*t, "tench") == "This is a picture of a tench");
    }
    SUBCASE("colour and texture rows carry their bound wording") {
        const auto* c1 = suite.find("color_prompt_1");
        REQUIRE(c1 != nullptr);
        CHECK(render_prompt(*c1, c1->substitution) == "This is a picture of a vivid red background");
        const auto* t2 = suite.find("texture_prompt_2");
        REQUIRE(t2 != nullptr);
        CHECK(render_prompt(*t2, t2->substitution) == "This is a picture of intricately textured background");
        const auto* t4 = suite.find("texture_prompt_4");
        REQUIRE(t4 != nullptr);
        CHECK(render_prompt(*t4, t4->substitution) ==
              "This is a photo of distorted textures in the background");
    }
    SUBCASE("caption rows pass the caption through") {
        const auto* c = suite.find("caption");
        REQUIRE(c != nullptr);
        CHECK(render_prompt(*c, "a dog on grass") == "a dog on grass");
    }
    SUBCASE("render is a pure function") {
        const auto* t = suite.find("class_label");
        CHECK(render_prompt(*t, "zebra") == render_prompt(*t, "zebra"));
    }
    SUBCASE("missing substitution rejected") {
        const auto* t = suite.find("class_label");
        CHECK_THROWS_AS(render_prompt(*t, ""), ValidationError);
    }
    SUBCASE("slot-count invariants enforced") {
        PromptTemplate bad;
        bad.variant_name = "x";
        bad.category = PromptCategory::color;
        bad.text = "no slot here";
        bad.substitution = "red";
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad.text = "two {} slots {}";
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad.category = PromptCategory::caption;
        bad.text = "{}";
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
}

TEST_CASE("conditioning bundle construction") {
    const auto scenes = toy::generate_shapes_dataset(8, 2024, "cond");
    const auto& scene = scenes[0];

    std::map<std::string, ObjectMask> masks;
    std::map<std::string, std::string> captions;
    for (const auto& s : scenes) {
        masks[s.id] = s.ground_truth_mask;
        captions[s.id] = s.caption;
    }
    const OracleMaskProvider oracle_masks(masks);
    const OracleCaptionProvider oracle_captions(captions);

    SUBCASE("oracle providers pass ground truth through") {
        const auto bundle =
            build_conditioning(scene.image, scene.class_label, scene.id, oracle_masks, oracle_captions);
        CHECK(eval::iou(bundle.mask.values, scene.ground_truth_mask.values) == doctest::Approx(1.0));
        CHECK(bundle.prompt_text == scene.caption);
        CHECK(bundle.source_image_id == scene.id);
        CHECK(bundle.class_label == scene.class_label);
    }
    SUBCASE("caption provider uses the scene template") {
        // circle is class 0, so scenes[0] is a circle.
        CHECK(scene.class_label == "circle");
        CHECK(scene.caption == toy::make_scene_caption("circle", scene.background_descriptor));
        CHECK(toy::make_scene_caption("circle", "plain") == "a picture of a circle on a plain background");
    }
    SUBCASE("threshold segmenter nails a plain-background scene") {
        // Uniform gray background, saturated square: the easy case it is
        // built for. Busy procedural backgrounds may defeat it, which is
        // exactly why the oracle provider exists.
        Image img = Tensorf::full({3, 32, 32}, 0.6f);
        ObjectMask gt;
        gt.values = Tensor<uint8_t>::zeros({32, 32});
        for (int y = 10; y < 22; ++y)
            for (int x = 8; x < 20; ++x) {
                gt.values[static_cast<size_t>(y) * 32 + x] = 1;
                img.at(0, y, x) = 0.9f;
                img.at(1, y, x) = 0.1f;
                img.at(2, y, x) = 0.15f;
            }
        const ThresholdMaskProvider threshold;
        const auto m = threshold.segment(img, "square", "plain_scene");
        CHECK(eval::iou(m.values, gt.values) == doctest::Approx(1.0));

        size_t good = 0;
        for (const auto& s : scenes) {
            const auto corpus_mask = threshold.segment(s.image, s.class_label, s.id);
            if (eval::iou(corpus_mask.values, s.ground_truth_mask.values) > 0.7) ++good;
        }
        CHECK(good * 2 >= scenes.size());
    }
    SUBCASE("provider swap changes content, not structure") {
        const ThresholdMaskProvider threshold;
        const auto a =
            build_conditioning(scene.image, scene.class_label, scene.id, oracle_masks, oracle_captions);
        const auto b =
            build_conditioning(scene.image, scene.class_label, scene.id, threshold, oracle_captions);
        CHECK(a.source_image_id == b.source_image_id);
        CHECK(a.class_label == b.class_label);
        CHECK(a.prompt_text == b.prompt_text);
        CHECK(a.mask.values.shape() == b.mask.values.shape());
    }
    SUBCASE("empty mask raises unsupported-image") {
        std::map<std::string, ObjectMask> empty_masks;
        ObjectMask empty;
        empty.values = Tensor<uint8_t>::zeros({toy::kSceneSize, toy::kSceneSize});
        empty_masks[scene.id] = empty;
        const OracleMaskProvider provider(empty_masks);
        CHECK_THROWS_AS(build_conditioning(scene.image, scene.class_label, scene.id, provider, oracle_captions),
                        UnsupportedImageError);
    }
    SUBCASE("full mask raises unsupported-image") {
        std::map<std::string, ObjectMask> full_masks;
        ObjectMask full;
        full.values = Tensor<uint8_t>::full({toy::kSceneSize, toy::kSceneSize}, 1);
        full_masks[scene.id] = full;
        const OracleMaskProvider provider(full_masks);
        CHECK_THROWS_AS(build_conditioning(scene.image, scene.class_label, scene.id, provider, oracle_captions),
                        UnsupportedImageError);
    }
    SUBCASE("caption failure surfaces as provider error with cause") {
        const OracleCaptionProvider no_captions((std::map<std::string, std::string>()));
        CHECK_THROWS_AS(
            build_conditioning(scene.image, scene.class_label, scene.id, oracle_masks, no_captions),
            ProviderError);
    }
}
