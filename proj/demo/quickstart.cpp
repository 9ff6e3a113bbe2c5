// Encodes a small synthetic route, trains the place classifier on the
// reference pass and matches an extreme-appearance query pass with and
// without the attractor filter.

#include <cstdio>

#include "flynet.hpp"

int main() {
  using namespace flynet;

  SynthConfig synth;
  synth.num_places = 100;
  synth.seed = 7;
  synth.noise_sigma = 0.15;
  synth.occluder_count = 3;
  const auto [reference, query] = generate_synthetic(synth);

  EncoderConfig enc;
  enc.seed = 11;
  const auto projection = build_projection(enc);
  const auto ref_codes = encode_traverse(projection, reference, enc);
  const auto query_codes = encode_traverse(projection, query, enc);
  std::printf("descriptor 0: %s\n", ref_codes[0].to_string().c_str());

  TrainConfig train;
  train.seed = 13;
  const auto fitted = fit(ref_codes, reference.labels, train, reference.size());
  std::printf("classifier accuracy on reference: %.3f\n", fitted.epoch_accuracy.back());

  const auto scores = forward_all(fitted.head, query_codes);
  std::vector<PlaceMatch> single;
  for (const auto& s : scores) single.push_back({s.argmax, s.max()});
  const auto cann = cann_run(scores, CannConfig::for_places(reference.size()));

  const Tolerance tol{5};
  for (const auto& [name, matches] : {std::pair{"FlyNet", single}, std::pair{"FlyNet+CANN", cann}}) {
    const auto records = make_records(matches, query.labels);
    std::printf("%-12s AUC %.3f  accuracy %.3f\n", name, auc(pr_curve(records, tol)), match_accuracy(records, tol));
  }
}
