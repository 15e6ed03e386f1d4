import numpy as np
import pytest

from localicp.dataset import (
    EnvironmentData,
    MultiEnvDataset,
    dataset_from_dict,
    dataset_to_dict,
    from_arrays,
    read_csv,
    read_json,
    write_csv,
    write_json,
)
from localicp.errors import InvalidInputError, ShapeError


def sample_dataset(labels=None):
    rng = np.random.default_rng(0)
    covs = [rng.normal(size=(4, 2)), rng.normal(size=(6, 2))]
    tgts = [rng.normal(size=4), rng.normal(size=6)]
    return from_arrays(covs, tgts, env_labels=labels)


class TestContainers:
    def test_environment_validation(self):
        with pytest.raises(ShapeError):
            EnvironmentData(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(InvalidInputError):
            EnvironmentData(np.array([[np.nan, 1.0]]), np.zeros(1))

    def test_basic_properties(self):
        data = sample_dataset()
        assert data.num_envs == 2
        assert data.num_covariates == 2
        assert data.sample_sizes == (4, 6)
        assert not data.intercept_added

    def test_with_intercept_appends_last_column(self):
        data = sample_dataset().with_intercept()
        assert data.intercept_added
        for env in data.environments:
            assert env.covariates.shape[1] == 3
            np.testing.assert_array_equal(env.covariates[:, -1], 1.0)
        # The covariate count excludes the constant column.
        assert data.num_covariates == 2

    def test_with_intercept_idempotent(self):
        data = sample_dataset().with_intercept()
        assert data.with_intercept() is data

    def test_mixed_covariate_width_rejected(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ShapeError):
            MultiEnvDataset(
                environments=(
                    EnvironmentData(rng.normal(size=(3, 2)), rng.normal(size=3)),
                    EnvironmentData(rng.normal(size=(3, 4)), rng.normal(size=3)),
                ),
                num_covariates=2,
            )


class TestCsv:
    def test_round_trip(self, tmp_path):
        data = sample_dataset(labels=("lab", "field"))
        path = tmp_path / "data.csv"
        write_csv(data, path)
        back = read_csv(path)
        assert back.env_labels == ("lab", "field")
        for a, b in zip(data.environments, back.environments):
            np.testing.assert_array_equal(a.covariates, b.covariates)
            np.testing.assert_array_equal(a.target, b.target)

    def test_environment_order_by_first_appearance(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text(
            "env,x1,y\n"
            "b,1.0,2.0\n"
            "a,3.0,4.0\n"
            "b,5.0,6.0\n"
        )
        data = read_csv(path)
        assert data.env_labels == ("b", "a")
        assert data.sample_sizes == (2, 1)

    def test_header_error_mentions_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(InvalidInputError, match="line 1"):
            read_csv(path)

    def test_bad_value_mentions_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("env,x1,y\n1,1.0,2.0\n1,oops,2.0\n")
        with pytest.raises(InvalidInputError, match="line 3"):
            read_csv(path)

    def test_field_count_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("env,x1,y\n1,1.0\n")
        with pytest.raises(InvalidInputError, match="line 2"):
            read_csv(path)

    def test_intercept_datasets_not_exported(self, tmp_path):
        with pytest.raises(InvalidInputError):
            write_csv(sample_dataset().with_intercept(), tmp_path / "x.csv")


class TestJson:
    def test_round_trip(self, tmp_path):
        data = sample_dataset(labels=("e1", "e2"))
        path = tmp_path / "data.json"
        write_json(data, path, metadata={"origin": "unit test"})
        back = read_json(path)
        assert back.env_labels == ("e1", "e2")
        for a, b in zip(data.environments, back.environments):
            np.testing.assert_array_equal(a.covariates, b.covariates)
            np.testing.assert_array_equal(a.target, b.target)

    def test_dict_round_trip(self):
        data = sample_dataset()
        doc = dataset_to_dict(data)
        assert doc["schema_version"] == 1
        back = dataset_from_dict(doc)
        assert back.num_covariates == 2

    def test_declared_width_mismatch(self):
        doc = dataset_to_dict(sample_dataset())
        doc["num_covariates"] = 5
        with pytest.raises(ShapeError):
            dataset_from_dict(doc)

    def test_malformed_document(self):
        with pytest.raises(InvalidInputError):
            dataset_from_dict({"environments": "nope"})

    def test_json_parse_error_mentions_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(InvalidInputError, match="line 1"):
            read_json(path)
