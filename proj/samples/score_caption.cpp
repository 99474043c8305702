// Scores one generated caption against a ground-truth caption with the three
// offline metrics. Embeddings come from the hashing mock, so the numbers
// only illustrate the plumbing.
//
//   score_caption <label> "<ground truth>" "<generated>"

#include <harcap/metrics.hpp>
#include <harcap/synthetic.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    if (argc != 4) {
        std::fprintf(stderr, "usage: %s <label> <ground-truth> <generated>\n", argv[0]);
        return 2;
    }
    const auto lexicon = harcap::synthetic::demo_lexicon();
    harcap::HashEmbedder embedder;
    try {
        auto kw = harcap::eval_keywords(argv[3], argv[1], lexicon);
        auto cos = harcap::eval_cosine(argv[2], argv[3], embedder);
        auto bert = harcap::eval_bert(argv[2], argv[3], embedder);
        std::printf("keywords        %-5s  hits: %s\n", kw.correct ? "true" : "false", kw.detail.c_str());
        std::printf("cosine          %-5s  %.4f\n", cos.correct ? "true" : "false", *cos.score);
        std::printf("bert_precision  %-5s  %.4f\n", bert.correct ? "true" : "false", *bert.score);
    } catch (const harcap::Error& e) {
        std::fprintf(stderr, "%s: %s\n", e.kind().c_str(), e.what());
        return 1;
    }
    return 0;
}
