import numpy as np
import pytest

from hdyn_exporter import HookSession, ProtocolError


class TestRecordBatch:
    def test_margin_definition(self):
        s = HookSession(1, 1, "toy")
        s.record_batch([0], [[2.0, 0.0]], [0])
        s.close_epoch()
        assert s._epochs["margin"][0][0] == np.float32(2.0)

    def test_tied_logits_argmax_lowest_class(self):
        s = HookSession(2, 1, "toy")
        # equal logits: argmax picks class 0, so only label 0 is "correct"
        s.record_batch([0, 1], [[1.0, 1.0], [1.0, 1.0]], [0, 1])
        s.close_epoch()
        correct = s._epochs["correct"][0]
        assert correct[0] and not correct[1]

    def test_loss_is_cross_entropy(self):
        s = HookSession(1, 1, "toy")
        s.record_batch([0], [[0.0, 0.0]], [0])
        s.close_epoch()
        assert s._epochs["loss"][0][0] == pytest.approx(np.log(2.0), rel=1e-6)

    def test_errnorm_uniform_softmax(self):
        s = HookSession(1, 1, "toy")
        s.record_batch([0], [[0.0, 0.0]], [0])
        s.close_epoch()
        assert s._epochs["errnorm"][0][0] == pytest.approx(np.sqrt(0.5), rel=1e-6)

    def test_duplicate_sample_rejected(self):
        s = HookSession(3, 1, "toy")
        s.record_batch([0, 1], [[1.0, 0.0]] * 2, [0, 0])
        with pytest.raises(ProtocolError):
            s.record_batch([1, 2], [[1.0, 0.0]] * 2, [0, 0])

    def test_duplicate_within_batch_rejected(self):
        s = HookSession(3, 1, "toy")
        with pytest.raises(ProtocolError):
            s.record_batch([0, 0], [[1.0, 0.0]] * 2, [0, 0])

    def test_out_of_range_id(self):
        s = HookSession(2, 1, "toy")
        with pytest.raises(ProtocolError):
            s.record_batch([5], [[1.0, 0.0]], [0])


class TestEpochProtocol:
    def test_close_with_missing_samples_lists_ids(self):
        s = HookSession(4, 1, "toy")
        s.record_batch([0, 2], [[1.0, 0.0]] * 2, [0, 0])
        with pytest.raises(ProtocolError, match=r"\[1, 3\]"):
            s.close_epoch()

    def test_write_before_all_epochs(self, tmp_path):
        s = HookSession(1, 2, "toy")
        s.record_batch([0], [[1.0, 0.0]], [0])
        s.close_epoch()
        with pytest.raises(ProtocolError):
            s.write(tmp_path / "d.hdyn")

    def test_too_many_epochs(self):
        s = HookSession(1, 1, "toy")
        s.record_batch([0], [[1.0, 0.0]], [0])
        s.close_epoch()
        s.record_batch([0], [[1.0, 0.0]], [0])
        with pytest.raises(ProtocolError):
            s.close_epoch()

    def test_epoch_major_order_independent_of_batch_arrival(self, tmp_path):
        def fill(order):
            s = HookSession(4, 2, "toy", channels=("margin",))
            rng = np.random.default_rng(1)
            logits = rng.normal(size=(2, 4, 3))
            for e in range(2):
                for i in order:
                    s.record_batch([i], logits[e, i][None, :], [i % 3])
                s.close_epoch()
            path = tmp_path / f"order_{order[0]}.hdyn"
            s.write(path)
            return path.read_bytes()

        assert fill([0, 1, 2, 3]) == fill([3, 1, 0, 2])


class TestChannels:
    def test_channel_subset_header_flags(self, tmp_path):
        s = HookSession(2, 1, "toy", channels=("margin", "loss", "correct"))
        s.record_batch([0, 1], [[1.0, 0.0], [0.0, 1.0]], [0, 1])
        s.close_epoch()
        path = tmp_path / "d.hdyn"
        s.write(path)
        blob = path.read_bytes()
        flags = int.from_bytes(blob[20:24], "little")
        assert flags == 0b0111  # errnorm bit clear

    def test_unknown_channel_rejected(self):
        with pytest.raises(ValueError):
            HookSession(1, 1, "toy", channels=("margin", "bogus"))

    def test_layout_epoch_major(self, tmp_path):
        s = HookSession(2, 2, "toy", channels=("margin",))
        s.record_batch([0, 1], [[3.0, 0.0], [5.0, 0.0]], [0, 0])
        s.close_epoch()
        s.record_batch([1, 0], [[6.0, 0.0], [4.0, 0.0]], [0, 0])
        s.close_epoch()
        path = tmp_path / "d.hdyn"
        s.write(path)
        blob = path.read_bytes()
        header = 26 + len(b"toy")
        values = np.frombuffer(blob, dtype="<f4", offset=header)
        np.testing.assert_array_equal(values, [3.0, 5.0, 4.0, 6.0])
