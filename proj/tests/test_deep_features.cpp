#include "test_util.hpp"

using namespace egofall;
using egofall::testing::expect_errc;

TEST(SampleFrameIndices, Examples) {
    EXPECT_EQ(sample_frame_indices(10), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    EXPECT_EQ(sample_frame_indices(240), (std::vector<std::size_t>{0, 27, 53, 80, 106, 133, 159, 186, 212, 239}));
    expect_errc(Errc::TooFewFrames, [] { sample_frame_indices(5); });
}

TEST(SampleFrameIndices, SpanWholeClip) {
    for (std::size_t n = 10; n < 400; ++n) {
        const auto idx = sample_frame_indices(n);
        ASSERT_EQ(idx.size(), 10u);
        EXPECT_EQ(idx.front(), 0u);
        EXPECT_EQ(idx.back(), n - 1);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
        EXPECT_EQ(idx, sample_frame_indices(n));
    }
}

TEST(ResizeForBackbone, Contracts) {
    Image a(224, 224);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        a.pixels[i] = static_cast<std::uint8_t>(i * 31 % 251);
    }
    EXPECT_EQ(resize_for_backbone(a), a);

    const auto c = resize_for_backbone(Image(448, 448, 93));
    for (auto v : c.pixels) {
        ASSERT_EQ(v, 93);
    }
    const auto big = resize_for_backbone(Image(1920, 1080, 5));
    EXPECT_EQ(big.width, 224);
    EXPECT_EQ(big.height, 224);
    EXPECT_EQ(big.pixels.size(), 224u * 224u * 3u);
}

TEST(PrecomputedBackend, ReturnsStoredVectorsInOrder) {
    TempDir dir("egofall_precomputed");
    FeatureCache cache(dir.path());
    const auto idx = sample_frame_indices(240);
    for (auto i : idx) {
        cache.store("c001", CacheChannel::deep_frame, std::vector<float>(2048, static_cast<float>(i) * 0.5f),
                    static_cast<std::uint32_t>(i));
    }
    PrecomputedBackend backend(cache);
    const auto out = backend.embed("c001", {}, idx);
    ASSERT_EQ(out.size(), 10u);
    for (std::size_t k = 0; k < 10; ++k) {
        EXPECT_EQ(out[k].frame_index, idx[k]);
        EXPECT_EQ(out[k].values, std::vector<float>(2048, static_cast<float>(idx[k]) * 0.5f));
    }
    const std::vector<std::size_t> missing{1};
    expect_errc(Errc::MissingPrecomputedEntry, [&] { backend.embed("c001", {}, missing); });
}

TEST(PrecomputedBackend, RejectsWrongDimension) {
    TempDir dir("egofall_precomputed_dim");
    FeatureCache cache(dir.path(), ChannelDims{238, 52, 20480, 1024});
    cache.store("c001", CacheChannel::deep_frame, std::vector<float>(1024, 1.0f), 0);
    PrecomputedBackend backend(FeatureCache(dir.path()));
    const std::vector<std::size_t> idx{0};
    expect_errc(Errc::EmbeddingDimMismatch, [&] { backend.embed("c001", {}, idx); });
}

TEST(CheckEmbeddingDim, Rejects1024) {
    expect_errc(Errc::EmbeddingDimMismatch, [] { check_embedding_dim(std::vector<float>(1024), "x"); });
    EXPECT_NO_THROW(check_embedding_dim(std::vector<float>(2048), "x"));
}

TEST(ExternalProcessBackend, DeterministicOnConstantFrame) {
    ExternalProcessBackend backend(std::string(EGOFALL_CLI_PATH) + " embed-stub --input {input} --output {output}");
    const std::vector<Image> frames{resize_for_backbone(Image(64, 48, 120)), resize_for_backbone(Image(64, 48, 120))};
    const std::vector<std::size_t> idx{0, 1};
    const auto out = backend.embed("c", frames, idx);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].values.size(), 2048u);
    EXPECT_EQ(out[0].values, out[1].values);
    EXPECT_EQ(out[0].values, thumbnail_embedding(frames[0]));

    ExternalProcessBackend failing("exit 4");
    expect_errc(Errc::BackendUnavailable, [&] { failing.embed("c", frames, idx); });
    ExternalProcessBackend none("");
    expect_errc(Errc::BackendUnavailable, [&] { none.embed("c", frames, idx); });
}

TEST(DeepClipVector, ConcatenationLayout) {
    std::vector<DeepFrameEmbedding> es;
    for (std::size_t i = 10; i-- > 0;) {
        es.push_back({std::vector<float>(2048, static_cast<float>(i)), i * 3});
    }
    const auto v = build_deep_clip_vector(es);
    ASSERT_EQ(v.values.size(), 20480u);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 2048; ++j) {
            ASSERT_EQ(v.values[2048 * i + j], static_cast<float>(i));
        }
        EXPECT_EQ(v.frame_indices[i], i * 3);
    }
    const auto back = split_deep_clip_vector(v);
    EXPECT_EQ(back[4].values, std::vector<float>(2048, 4.0f));
}

TEST(DeepClipVector, Errors) {
    std::vector<DeepFrameEmbedding> nine(9, {std::vector<float>(2048), 0});
    expect_errc(Errc::WrongCount, [&] { build_deep_clip_vector(nine); });
    std::vector<DeepFrameEmbedding> ten(10, {std::vector<float>(2048), 0});
    ten[3].values.resize(2047);
    expect_errc(Errc::WrongDim, [&] { build_deep_clip_vector(ten); });
}
