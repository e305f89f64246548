#include "softts/models.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "softts/errors.hpp"

namespace softts {

using nn::Conv1d;
using nn::Mode;
using nn::Tensor;

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::inception: return "inception";
    case Architecture::lstm_fcn: return "lstm_fcn";
    case Architecture::resnet18: return "resnet18";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2", "num_classes");
  if (architecture == Architecture::inception && inception_depth != 1 && inception_depth != 2 &&
      inception_depth != 3 && inception_depth != 6) {
    throw ConfigError("inception depth must be 1, 2, 3 or 6", "depth");
  }
  if (base_channels < 0) throw ConfigError("base_channels must be positive", "base_channels");
  if (lstm_hidden < 1) throw ConfigError("lstm_hidden must be positive", "lstm_hidden");
  if (!(lstm_dropout >= 0.0 && lstm_dropout < 1.0)) throw ConfigError("lstm_dropout must be in [0, 1)", "lstm_dropout");
  if (input_length < min_input_length()) {
    throw DimensionError(name() + " needs series of length >= " + std::to_string(min_input_length()) + ", got " +
                         std::to_string(input_length));
  }
}

int ModelSpec::channels() const {
  if (base_channels > 0) return base_channels;
  switch (architecture) {
    case Architecture::inception: return 32;
    case Architecture::lstm_fcn: return 128;
    case Architecture::resnet18: return 64;
  }
  return 32;
}

std::string ModelSpec::name() const {
  switch (architecture) {
    case Architecture::inception:
      return inception_depth == 6 ? "inceptiontime" : "inceptiontime-" + std::to_string(inception_depth);
    case Architecture::lstm_fcn: return "lstm-fcn";
    case Architecture::resnet18: return "resnet18";
  }
  return "unknown";
}

int ModelSpec::min_input_length() const {
  switch (architecture) {
    case Architecture::inception: return 3;  // max-pool window
    case Architecture::lstm_fcn: return 8;   // first conv kernel
    case Architecture::resnet18: return 7;   // stem kernel
  }
  return 1;
}

ModelSpec ModelSpec::from_name(std::string_view name) {
  ModelSpec s;
  if (name == "inceptiontime") {
    s.inception_depth = 6;
  } else if (name == "inceptiontime-1" || name == "inceptiontime-2" || name == "inceptiontime-3") {
    s.inception_depth = name.back() - '0';
  } else if (name == "lstm-fcn") {
    s.architecture = Architecture::lstm_fcn;
  } else if (name == "resnet18") {
    s.architecture = Architecture::resnet18;
  } else {
    throw ConfigError("unknown model '" + std::string(name) + "'");
  }
  return s;
}

namespace {

// Bottleneck, three parallel convolutions (kernels 40/20/10), and a
// max-pool + 1x1 branch, concatenated and normalized.
class InceptionModule final : public nn::Layer {
 public:
  InceptionModule(int in_channels, int filters, std::mt19937_64& rng)
      : use_bottleneck_(in_channels > 1), pool_(3, 1, 1, 1), bn_(4 * filters) {
    const int branch_in = use_bottleneck_ ? filters : in_channels;
    if (use_bottleneck_) bottleneck_ = Conv1d::same(in_channels, filters, 1, false, rng);
    for (int k : {40, 20, 10}) convs_.push_back(Conv1d::same(branch_in, filters, k, false, rng));
    pool_conv_ = Conv1d::same(in_channels, filters, 1, false, rng);
    filters_ = filters;
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    const Tensor xb = use_bottleneck_ ? bottleneck_->forward(x, mode) : x;
    std::array<Tensor, 4> parts;
    for (std::size_t k = 0; k < 3; ++k) parts[k] = convs_[k]->forward(xb, mode);
    parts[3] = pool_conv_->forward(pool_.forward(x, mode), mode);
    const std::array<const Tensor*, 4> ptrs{&parts[0], &parts[1], &parts[2], &parts[3]};
    return relu_.forward(bn_.forward(nn::concat_channels(ptrs), mode), mode);
  }

  Tensor backward(const Tensor& grad) override {
    const Tensor g = bn_.backward(relu_.backward(grad));
    Tensor gb = convs_[0]->backward(nn::slice_channels(g, 0, filters_));
    for (std::size_t k = 1; k < 3; ++k) {
      nn::add_inplace(gb, convs_[k]->backward(nn::slice_channels(g, int(k) * filters_, filters_)));
    }
    Tensor gx = use_bottleneck_ ? bottleneck_->backward(gb) : gb;
    nn::add_inplace(gx, pool_.backward(pool_conv_->backward(nn::slice_channels(g, 3 * filters_, filters_))));
    return gx;
  }

  void collect(std::vector<nn::Parameter*>& p, std::vector<std::vector<float>*>& b) override {
    if (use_bottleneck_) bottleneck_->collect(p, b);
    for (auto& c : convs_) c->collect(p, b);
    pool_conv_->collect(p, b);
    bn_.collect(p, b);
  }

 private:
  bool use_bottleneck_;
  int filters_ = 0;
  std::unique_ptr<Conv1d> bottleneck_;
  std::vector<std::unique_ptr<Conv1d>> convs_;
  nn::MaxPool1d pool_;
  std::unique_ptr<Conv1d> pool_conv_;
  nn::BatchNorm1d bn_;
  nn::ReLU relu_;
};

// 1x1 projection + batch norm added to the block output, then ReLU.
struct InceptionShortcut {
  InceptionShortcut(int in_channels, int out_channels, std::mt19937_64& rng)
      : conv(Conv1d::same(in_channels, out_channels, 1, false, rng)), bn(out_channels) {}
  std::unique_ptr<Conv1d> conv;
  nn::BatchNorm1d bn;
  nn::ReLU relu;
};

class InceptionTimeBody final : public nn::Layer {
 public:
  InceptionTimeBody(int depth, int filters, std::mt19937_64& rng) {
    int in = 1, res_in = 1;
    for (int d = 0; d < depth; ++d) {
      modules_.push_back(std::make_unique<InceptionModule>(in, filters, rng));
      in = 4 * filters;
      if (d % 3 == 2) {
        shortcuts_.push_back(std::make_unique<InceptionShortcut>(res_in, in, rng));
        res_in = in;
      }
    }
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    Tensor cur = x;
    Tensor res = x;
    std::size_t s = 0;
    for (std::size_t d = 0; d < modules_.size(); ++d) {
      cur = modules_[d]->forward(cur, mode);
      if (d % 3 == 2) {
        auto& sc = *shortcuts_[s++];
        Tensor proj = sc.bn.forward(sc.conv->forward(res, mode), mode);
        nn::add_inplace(proj, cur);
        cur = sc.relu.forward(proj, mode);
        res = cur;
      }
    }
    return gap_.forward(cur, mode);
  }

  Tensor backward(const Tensor& grad) override {
    Tensor g = gap_.backward(grad);
    Tensor pending;  // gradient reaching the input of the current residual block via its shortcut
    std::size_t s = shortcuts_.size();
    for (std::size_t d = modules_.size(); d-- > 0;) {
      if (d % 3 == 2) {
        auto& sc = *shortcuts_[--s];
        g = sc.relu.backward(g);
        pending = sc.conv->backward(sc.bn.backward(g));
      }
      g = modules_[d]->backward(g);
      if (d % 3 == 0 && !pending.data.empty()) {
        nn::add_inplace(g, pending);
        pending = Tensor();
      }
    }
    return g;
  }

  void collect(std::vector<nn::Parameter*>& p, std::vector<std::vector<float>*>& b) override {
    std::size_t s = 0;
    for (std::size_t d = 0; d < modules_.size(); ++d) {
      modules_[d]->collect(p, b);
      if (d % 3 == 2) {
        shortcuts_[s]->conv->collect(p, b);
        shortcuts_[s]->bn.collect(p, b);
        ++s;
      }
    }
  }

 private:
  std::vector<std::unique_ptr<InceptionModule>> modules_;
  std::vector<std::unique_ptr<InceptionShortcut>> shortcuts_;
  nn::GlobalAvgPool gap_;
};

// Recurrent branch (LSTM + dropout) beside a three-block convolutional branch.
class LstmFcnBody final : public nn::Layer {
 public:
  LstmFcnBody(int filters, int hidden, double dropout, std::mt19937_64& rng)
      : lstm_(1, hidden, rng), dropout_(dropout, rng()), hidden_(hidden), filters_(filters) {
    conv_.add(Conv1d::same(1, filters, 8, true, rng))
        .add(std::make_unique<nn::BatchNorm1d>(filters))
        .add(std::make_unique<nn::ReLU>())
        .add(Conv1d::same(filters, 2 * filters, 5, true, rng))
        .add(std::make_unique<nn::BatchNorm1d>(2 * filters))
        .add(std::make_unique<nn::ReLU>())
        .add(Conv1d::same(2 * filters, filters, 3, true, rng))
        .add(std::make_unique<nn::BatchNorm1d>(filters))
        .add(std::make_unique<nn::ReLU>())
        .add(std::make_unique<nn::GlobalAvgPool>());
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    const Tensor r = dropout_.forward(lstm_.forward(x, mode), mode);
    const Tensor c = conv_.forward(x, mode);
    const std::array<const Tensor*, 2> ptrs{&r, &c};
    return nn::concat_channels(ptrs);
  }

  Tensor backward(const Tensor& grad) override {
    Tensor gx = lstm_.backward(dropout_.backward(nn::slice_channels(grad, 0, hidden_)));
    nn::add_inplace(gx, conv_.backward(nn::slice_channels(grad, hidden_, filters_)));
    return gx;
  }

  void collect(std::vector<nn::Parameter*>& p, std::vector<std::vector<float>*>& b) override {
    lstm_.collect(p, b);
    conv_.collect(p, b);
  }

  void reseed(std::uint64_t seed) override { dropout_.reseed(seed); }

 private:
  nn::Lstm lstm_;
  nn::Dropout dropout_;
  nn::Sequential conv_;
  int hidden_, filters_;
};

class BasicBlock final : public nn::Layer {
 public:
  BasicBlock(int in_channels, int out_channels, int stride, std::mt19937_64& rng)
      : conv1_(in_channels, out_channels, 3, stride, 1, 1, false, rng),
        bn1_(out_channels),
        conv2_(out_channels, out_channels, 3, 1, 1, 1, false, rng),
        bn2_(out_channels) {
    if (stride != 1 || in_channels != out_channels) {
      down_conv_ = std::make_unique<Conv1d>(in_channels, out_channels, 1, stride, 0, 0, false, rng);
      down_bn_ = std::make_unique<nn::BatchNorm1d>(out_channels);
    }
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    Tensor out = bn2_.forward(conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x, mode), mode), mode), mode), mode);
    if (down_conv_) {
      nn::add_inplace(out, down_bn_->forward(down_conv_->forward(x, mode), mode));
    } else {
      nn::add_inplace(out, x);
    }
    return relu_out_.forward(out, mode);
  }

  Tensor backward(const Tensor& grad) override {
    const Tensor g = relu_out_.backward(grad);
    Tensor gx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(g)))));
    if (down_conv_) {
      nn::add_inplace(gx, down_conv_->backward(down_bn_->backward(g)));
    } else {
      nn::add_inplace(gx, g);
    }
    return gx;
  }

  void collect(std::vector<nn::Parameter*>& p, std::vector<std::vector<float>*>& b) override {
    conv1_.collect(p, b);
    bn1_.collect(p, b);
    conv2_.collect(p, b);
    bn2_.collect(p, b);
    if (down_conv_) {
      down_conv_->collect(p, b);
      down_bn_->collect(p, b);
    }
  }

 private:
  Conv1d conv1_;
  nn::BatchNorm1d bn1_;
  nn::ReLU relu1_;
  Conv1d conv2_;
  nn::BatchNorm1d bn2_;
  std::unique_ptr<Conv1d> down_conv_;
  std::unique_ptr<nn::BatchNorm1d> down_bn_;
  nn::ReLU relu_out_;
};

std::unique_ptr<nn::Layer> make_resnet18(int width, std::mt19937_64& rng) {
  auto body = std::make_unique<nn::Sequential>();
  body->add(std::make_unique<Conv1d>(1, width, 7, 2, 3, 3, false, rng))
      .add(std::make_unique<nn::BatchNorm1d>(width))
      .add(std::make_unique<nn::ReLU>())
      .add(std::make_unique<nn::MaxPool1d>(3, 2, 1, 1));
  int in = width;
  for (int stage = 0; stage < 4; ++stage) {
    const int out = width << stage;
    body->add(std::make_unique<BasicBlock>(in, out, stage == 0 ? 1 : 2, rng));
    body->add(std::make_unique<BasicBlock>(out, out, 1, rng));
    in = out;
  }
  body->add(std::make_unique<nn::GlobalAvgPool>());
  return body;
}

constexpr char kCheckpointMagic[8] = {'S', 'O', 'F', 'T', 'T', 'S', 'C', '1'};

}  // namespace

Classifier::Classifier(ModelSpec spec, std::unique_ptr<nn::Layer> body, int feature_dim, std::mt19937_64& rng)
    : spec_(std::move(spec)), body_(std::move(body)), head_(feature_dim, spec_.num_classes, rng), feature_dim_(feature_dim) {}

Classifier::Output Classifier::forward(const Tensor& x, Mode mode) {
  if (x.c != 1 || x.t != spec_.input_length) {
    throw DimensionError(spec_.name() + ": expected series of length " + std::to_string(spec_.input_length) +
                         ", got " + std::to_string(x.t));
  }
  Output out;
  out.features = body_->forward(x, mode);
  out.logits = head_.forward(out.features, mode);
  return out;
}

void Classifier::backward(const Tensor& grad_logits) { body_->backward(head_.backward(grad_logits)); }

std::vector<nn::Parameter*> Classifier::parameters() {
  std::vector<nn::Parameter*> p;
  std::vector<std::vector<float>*> b;
  body_->collect(p, b);
  head_.collect(p, b);
  return p;
}

std::vector<std::vector<float>*> Classifier::buffers() {
  std::vector<nn::Parameter*> p;
  std::vector<std::vector<float>*> b;
  body_->collect(p, b);
  return b;
}

std::size_t Classifier::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

void Classifier::save(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  auto write_block = [&](const std::vector<float>& v) {
    const std::uint64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(n * sizeof(float)));
  };
  for (auto* p : parameters()) write_block(p->value);
  for (auto* b : buffers()) write_block(*b);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

void Classifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw ParseError(path.string() + ": not a checkpoint");
  auto read_block = [&](std::vector<float>& v) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n != v.size()) throw ParseError(path.string() + ": checkpoint does not match the model");
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(float)));
  };
  for (auto* p : parameters()) read_block(p->value);
  for (auto* b : buffers()) read_block(*b);
  if (!in) throw ParseError(path.string() + ": truncated checkpoint");
}

std::unique_ptr<Classifier> build_model(const ModelSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int width = spec.channels();
  std::unique_ptr<nn::Layer> body;
  int features = 0;
  switch (spec.architecture) {
    case Architecture::inception:
      body = std::make_unique<InceptionTimeBody>(spec.inception_depth, width, rng);
      features = 4 * width;
      break;
    case Architecture::lstm_fcn:
      body = std::make_unique<LstmFcnBody>(width, spec.lstm_hidden, spec.lstm_dropout, rng);
      features = width + spec.lstm_hidden;
      break;
    case Architecture::resnet18:
      body = make_resnet18(width, rng);
      features = 8 * width;
      break;
  }
  return std::make_unique<Classifier>(spec, std::move(body), features, rng);
}

nn::Tensor to_tensor(const Matrix& batch) {
  Tensor x(int(batch.rows), 1, int(batch.cols));
  for (std::size_t i = 0; i < batch.data.size(); ++i) x.data[i] = float(batch.data[i]);
  return x;
}

nn::Tensor to_tensor(const Matrix& samples, std::span<const std::size_t> rows) {
  Tensor x(int(rows.size()), 1, int(samples.cols));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    auto src = samples.row(rows[b]);
    for (std::size_t i = 0; i < samples.cols; ++i) x.data[b * samples.cols + i] = float(src[i]);
  }
  return x;
}

std::vector<ClassifierOutput> forward(Classifier& model, const Matrix& batch, Mode mode) {
  const auto out = model.forward(to_tensor(batch), mode);
  std::vector<ClassifierOutput> result(batch.rows);
  const int L = out.logits.c, F = out.features.c;
  for (std::size_t b = 0; b < batch.rows; ++b) {
    result[b].logits.assign(out.logits.data.begin() + std::ptrdiff_t(b * L), out.logits.data.begin() + std::ptrdiff_t((b + 1) * L));
    result[b].penultimate.assign(out.features.data.begin() + std::ptrdiff_t(b * F),
                                 out.features.data.begin() + std::ptrdiff_t((b + 1) * F));
  }
  return result;
}

}  // namespace softts
