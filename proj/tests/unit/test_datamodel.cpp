#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "neoface/datamodel.hpp"
#include "neoface/json_io.hpp"
#include "test_support.hpp"

using namespace neoface;
using nlohmann::json;

namespace {

FaceAnnotation make_annotation(const std::string& id, const std::string& subject, int w = 100,
                               int h = 80) {
    FaceAnnotation a;
    a.image_id = id;
    a.image_path = "images/" + id + ".png";
    a.subject_id = subject;
    a.dims = {w, h};
    a.face = {10, 10, 40, 40};
    for (LandmarkName n : kAllLandmarks) {
        a.landmarks.set(n, {20.0 + static_cast<int>(n), 30.0});
    }
    return a;
}

// Subjects with the given image counts; subject i is "p<i>".
Dataset sized_dataset(const std::vector<int>& sizes) {
    std::vector<FaceAnnotation> anns;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        for (int i = 0; i < sizes[s]; ++i) {
            anns.push_back(make_annotation("p" + std::to_string(s) + "_" + std::to_string(i),
                                           "p" + std::to_string(s)));
        }
    }
    return Dataset(std::move(anns));
}

std::map<std::string, std::string> subject_of(const Dataset& d) {
    std::map<std::string, std::string> out;
    for (const auto& a : d.annotations()) out[a.image_id] = a.subject_id;
    return out;
}

json minimal_file() {
    return json::parse(R"({
      "version": 1,
      "images": [{
        "id": "a", "path": "a.png", "subject": "baby1", "width": 100, "height": 80,
        "face": {"x": 10, "y": 10, "w": 40, "h": 40},
        "landmarks": {"right_eye": [20, 25], "left_eye": [40, 25], "nose": [30, 35],
                      "right_mouth": [22, 42], "centre_mouth": [30, 43], "left_mouth": [38, 42]}
      }]
    })");
}

}  // namespace

TEST_CASE("landmark names") {
    for (LandmarkName n : kAllLandmarks) {
        CHECK(parse_landmark_name(to_string(n)) == n);
        CHECK(mirrored(mirrored(n)) == n);
    }
    CHECK(mirrored(LandmarkName::RightEye) == LandmarkName::LeftEye);
    CHECK(mirrored(LandmarkName::LeftMouth) == LandmarkName::RightMouth);
    CHECK(mirrored(LandmarkName::Nose) == LandmarkName::Nose);
    CHECK(mirrored(LandmarkName::CentreMouth) == LandmarkName::CentreMouth);
    CHECK_FALSE(parse_landmark_name("left_ear").has_value());
}

TEST_CASE("landmark set") {
    LandmarkSet s;
    CHECK(s.empty());
    s.set(LandmarkName::Nose, {1, 2});
    s.set(LandmarkName::RightEye, {3, 4});
    CHECK(s.size() == 2);
    CHECK(s.names() == std::vector<LandmarkName>{LandmarkName::RightEye, LandmarkName::Nose});
    const LandmarkSet r = s.restricted_to({LandmarkName::Nose, LandmarkName::LeftEye});
    CHECK(r.size() == 1);
    CHECK(r[LandmarkName::Nose] == Point{1, 2});
    s.erase(LandmarkName::Nose);
    CHECK_FALSE(s.contains(LandmarkName::Nose));
}

TEST_CASE("minimal file with one image and six landmarks") {
    const Dataset d = parse_annotations(minimal_file());
    REQUIRE(d.size() == 1);
    CHECK(d.at("a").landmarks.size() == 6);
    CHECK(d.at("a").face == BBox{10, 10, 40, 40});
    CHECK(d.subjects().at("baby1") == std::vector<std::string>{"a"});
}

TEST_CASE("landmark outside the frame names the image") {
    json doc = minimal_file();
    doc["images"][0]["landmarks"]["nose"] = {105, 35};
    try {
        parse_annotations(doc);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        REQUIRE(e.violations().size() == 1);
        CHECK(e.violations()[0].find("'a'") != std::string::npos);
        CHECK(e.violations()[0].find("nose") != std::string::npos);
    }
}

TEST_CASE("every violation is reported") {
    json doc = minimal_file();
    json second = doc["images"][0];
    second["face"] = {{"x", 90}, {"y", 10}, {"w", 40}, {"h", 40}};
    doc["images"].push_back(second);
    try {
        parse_annotations(doc);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const auto& v = e.violations();
        CHECK(v.size() == 2);
        CHECK(std::any_of(v.begin(), v.end(),
                          [](const auto& s) { return s.find("duplicate") != std::string::npos; }));
        CHECK(std::any_of(v.begin(), v.end(),
                          [](const auto& s) { return s.find("face box") != std::string::npos; }));
    }
}

TEST_CASE("malformed files") {
    json doc = minimal_file();
    doc["version"] = 2;
    CHECK_THROWS_AS(parse_annotations(doc), ParseError);
    CHECK_THROWS_AS(parse_annotations(json::array()), ParseError);
    doc = minimal_file();
    doc["images"][0].erase("subject");
    CHECK_THROWS_AS(parse_annotations(doc), ValidationError);
    doc = minimal_file();
    doc["images"][0]["width"] = 0;
    CHECK_THROWS_AS(parse_annotations(doc), ValidationError);
    doc = minimal_file();
    doc["images"][0]["landmarks"]["left_ear"] = {1, 1};
    CHECK_THROWS_AS(parse_annotations(doc), ValidationError);
    CHECK_THROWS_AS(load_annotations("/nonexistent/annotations.json"), ParseError);
}

TEST_CASE("occluded landmarks may be absent") {
    json doc = minimal_file();
    doc["images"][0]["landmarks"].erase("left_mouth");
    const Dataset d = parse_annotations(doc);
    CHECK_FALSE(d.at("a").landmarks.contains(LandmarkName::LeftMouth));
}

TEST_CASE("annotations survive a save and load") {
    testing::TempDir tmp;
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    save_annotations(d.annotations(), tmp / "copy.json");
    const Dataset back = load_annotations(tmp / "copy.json");
    CHECK(back.annotations() == d.annotations());
}

TEST_CASE("fixture subject index") {
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    CHECK(d.size() == 12);
    std::map<std::string, std::size_t> sizes;
    for (const auto& [s, ids] : d.subjects()) sizes[s] = ids.size();
    CHECK(sizes == std::map<std::string, std::size_t>{
                       {"s1", 3}, {"s2", 3}, {"s3", 2}, {"s4", 2}, {"s5", 2}});
}

TEST_CASE("fixture split at fraction 0.2") {
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    const auto subject = subject_of(d);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const TrainTestSplit s = split_train_test(d, 0.2, seed);
        std::set<std::string> test_subjects, train_subjects;
        for (const auto& id : s.test) test_subjects.insert(subject.at(id));
        for (const auto& id : s.train) train_subjects.insert(subject.at(id));
        CAPTURE(seed);
        CHECK(s.test.size() >= 3);
        CHECK(test_subjects.size() >= 1);
        CHECK(test_subjects.size() <= 2);
        CHECK(s.test.size() + s.train.size() == 12);
        for (const auto& t : test_subjects) CHECK(train_subjects.count(t) == 0);
        // Whole subjects only.
        std::size_t expected_test = 0;
        for (const auto& t : test_subjects) expected_test += d.subjects().at(t).size();
        CHECK(s.test.size() == expected_test);
    }
    const TrainTestSplit a = split_train_test(d, 0.2, 0);
    const TrainTestSplit b = split_train_test(d, 0.2, 0);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
}

TEST_CASE("split of two equal subjects at 0.5") {
    const Dataset d = sized_dataset({2, 2});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TrainTestSplit s = split_train_test(d, 0.5, seed);
        CHECK(s.test.size() == 2);
        CHECK(s.train.size() == 2);
        CHECK(s.test[0].substr(0, 2) == s.test[1].substr(0, 2));
        CHECK(s.test[0].substr(0, 2) != s.train[0].substr(0, 2));
    }
}

TEST_CASE("split argument errors") {
    const Dataset d = sized_dataset({2, 2});
    CHECK_THROWS_AS(split_train_test(d, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_train_test(d, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_train_test(sized_dataset({4}), 0.2, 0), Error);
}

TEST_CASE("kfold with one subject per fold") {
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    const FoldSplit f = kfold(d, 5, 0);
    REQUIRE(f.folds.size() == 5);
    const auto subject = subject_of(d);
    std::set<std::string> seen;
    for (const auto& fold : f.folds) {
        std::set<std::string> subjects;
        for (const auto& id : fold) subjects.insert(subject.at(id));
        CHECK(subjects.size() == 1);
        seen.insert(subjects.begin(), subjects.end());
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("kfold balances sizes (4,1,1,1,1) into (4,4)") {
    const Dataset d = sized_dataset({4, 1, 1, 1, 1});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const FoldSplit f = kfold(d, 2, seed);
        std::vector<std::size_t> sizes{f.folds[0].size(), f.folds[1].size()};
        CAPTURE(seed);
        CHECK(sizes == std::vector<std::size_t>{4, 4});
    }
}

TEST_CASE("kfold determinism and errors") {
    const Dataset d = sized_dataset({3, 2, 2, 1, 1, 1});
    CHECK(kfold(d, 3, 9).folds == kfold(d, 3, 9).folds);
    CHECK_THROWS_AS(kfold(d, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(kfold(d, 7, 0), Error);
    std::size_t total = 0;
    for (const auto& fold : kfold(d, 3, 1).folds) total += fold.size();
    CHECK(total == d.size());
}
