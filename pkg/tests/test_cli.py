import pytest

from luauth import cli

SEED_HEX = bytes(range(32)).hex()
AT = "1700000000000"


@pytest.fixture
def run(capsys, monkeypatch):
    def go(*argv, password="s3cret"):
        if password is None:
            monkeypatch.delenv(cli.PASSWORD_ENV, raising=False)
        else:
            monkeypatch.setenv(cli.PASSWORD_ENV, password)
        code = cli.main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return go


@pytest.fixture
def files(tmp_path, run):
    server = tmp_path / "server.lusv"
    card = tmp_path / "alice.lucd"
    assert run("init", "--seed", SEED_HEX, "--n", 8, "--out", server)[0] == 0
    assert run("register", "--server", server, "--id", "alice", "--card-out", card,
               "--rng-seed", 1)[0] == 0
    return server, card


class TestInit:
    def test_writes_file(self, tmp_path, run):
        out = tmp_path / "s.lusv"
        code, text, _ = run("init", "--seed", SEED_HEX, "--n", 4, "--out", out)
        assert code == 0 and out.exists()
        assert "n=4" in text and "rejection_count=0" in text

    def test_n_one(self, tmp_path, run):
        code, _, err = run("init", "--seed", SEED_HEX, "--n", 1, "--out", tmp_path / "s")
        assert code == 2 and "usage" in err

    def test_bad_seed(self, tmp_path, run):
        code, _, _ = run("init", "--seed", "abcd", "--out", tmp_path / "s")
        assert code == 2

    def test_non_prime_modulus(self, tmp_path, run):
        assert run("init", "--p", 100, "--out", tmp_path / "s")[0] == 2

    def test_field_too_small(self, tmp_path, run):
        assert run("init", "--seed", SEED_HEX, "--n", 4, "--p", 7, "--out", tmp_path / "s")[0] == 1

    def test_byte_identical(self, tmp_path, run):
        a, b = tmp_path / "a", tmp_path / "b"
        run("init", "--seed", SEED_HEX, "--n", 6, "--out", a)
        run("init", "--seed", SEED_HEX, "--n", 6, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_machine_output(self, tmp_path, run):
        code, text, _ = run("init", "--machine", "--seed", SEED_HEX, "--n", 3,
                            "--out", tmp_path / "s")
        assert code == 0
        assert dict(l.split("=", 1) for l in text.splitlines())["n"] == "3"


class TestRegister:
    def test_bad_id(self, files, run, tmp_path):
        server, _ = files
        code, _, _ = run("register", "--server", server, "--id", "bad id!",
                         "--card-out", tmp_path / "x")
        assert code == 1

    def test_password_not_echoed(self, files, run, tmp_path):
        server, _ = files
        code, out, err = run("register", "--server", server, "--id", "bob",
                             "--card-out", tmp_path / "b", password="hush-hush-99")
        assert code == 0 and "hush-hush-99" not in out + err

    def test_missing_server(self, run, tmp_path):
        code, _, _ = run("register", "--server", tmp_path / "nope", "--id", "bob",
                         "--card-out", tmp_path / "b")
        assert code == 2

    def test_empty_password(self, files, run, tmp_path):
        server, _ = files
        code, _, _ = run("register", "--server", server, "--id", "bob",
                         "--card-out", tmp_path / "b", password="")
        assert code == 1


class TestLogin:
    def test_honest(self, files, run):
        server, card = files
        code, out, _ = run("login", "--server", server, "--card", card, "--at-millis", AT)
        assert code == 0
        assert "server: Accept" in out and "card:   Accept" in out

    def test_wrong_password(self, files, run):
        server, card = files
        code, out, _ = run("login", "--machine", "--server", server,
                           "--card", card, "--at-millis", AT, password="wrong")
        assert code == 1
        assert "server_verdict=KeyMismatch" in out.splitlines()

    def test_delay_beyond_window(self, files, run):
        server, card = files
        code, out, _ = run("login", "--server", server, "--card", card, "--at-millis", AT,
                           "--delay-ms", 30_001)
        assert code == 1 and "StaleTimestamp" in out

    def test_machine_lines(self, files, run):
        server, card = files
        code, out, _ = run("login", "--machine", "--server", server, "--card", card,
                           "--at-millis", AT, "--rng-seed", 3)
        assert code == 0
        pairs = dict(l.split("=", 1) for l in out.splitlines())
        assert pairs["card_r"] == pairs["server_r_prime"]
        assert pairs["t"] == AT

    def test_corrupt_card(self, files, run):
        server, card = files
        data = bytearray(card.read_bytes())
        data[20] ^= 1
        card.write_bytes(bytes(data))
        assert run("login", "--server", server, "--card", card)[0] == 2


class TestAttack:
    def test_default_suite(self, files, run):
        server, card = files
        code, out, _ = run("attack", "--server", server, "--card", card, "--trials", 20,
                           "--at-millis", AT, "--rng-seed", 1)
        assert code == 0, out
        assert "replay-window" in out and "FAIL" not in out

    def test_zero_trials(self, files, run):
        server, card = files
        assert run("attack", "--server", server, "--card", card, "--trials", 0)[0] == 2

    def test_with_replay_cache(self, tmp_path, run):
        server, card = tmp_path / "s", tmp_path / "c"
        run("init", "--seed", SEED_HEX, "--n", 4, "--replay-cache", "--out", server)
        run("register", "--server", server, "--id", "alice", "--card-out", card)
        code, out, _ = run("attack", "--machine", "--server", server, "--card", card,
                           "--suite", "replay", "--at-millis", AT)
        assert code == 0
        pairs = dict(l.split("=", 1) for l in out.splitlines())
        assert pairs["replay_window.expected"] == "0"
        assert pairs["replay_window.accepts"] == "0"

    def test_wrong_password_is_usage_error(self, files, run):
        server, card = files
        assert run("attack", "--server", server, "--card", card, password="wrong")[0] == 2


class TestInspect:
    def test_server(self, files, run):
        server, _ = files
        code, out, _ = run("inspect", server)
        assert code == 0 and out.startswith("server, n=8, p=")
        assert "phi" not in out

    def test_card_reveal(self, files, run):
        _, card = files
        code, out, _ = run("inspect", "--machine", "--reveal-secrets", card)
        pairs = dict(l.split("=", 1) for l in out.splitlines())
        assert code == 0 and len(pairs["u_col"].split(",")) == 8
        assert pairs["id"] == "alice"

    def test_card_hides_secrets(self, files, run):
        _, card = files
        code, out, _ = run("inspect", card)
        assert code == 0 and "theta" not in out and "k_block" not in out

    def test_corrupt(self, files, run):
        server, _ = files
        data = bytearray(server.read_bytes())
        data[-1] ^= 1
        server.write_bytes(bytes(data))
        assert run("inspect", server)[0] == 1

    def test_unknown_type(self, tmp_path, run):
        f = tmp_path / "junk"
        f.write_bytes(b"hello world")
        assert run("inspect", f)[0] == 1

    def test_missing(self, tmp_path, run):
        assert run("inspect", tmp_path / "nope")[0] == 2
