"""Bundle loading and cross-document validation."""

import random

from specagent.parser import load_bundle, validate_bundle


def doc(name, *, extra=""):
    return (
        f"# Tool: {name}\n\n## Purpose\nDoes {name} things.\n" + extra
    )


def codes(diags):
    return sorted(d.code for d in diags)


class TestLoadBundle:
    def test_demo_bundle_counts(self, demo_documents):
        bundle, diags = load_bundle(demo_documents, "factory-floor")
        assert bundle is not None
        assert len(bundle.tools) == len(demo_documents) == 6

    def test_duplicate_tool_name_is_e010(self):
        documents = [("a.md", doc("Same")), ("b.md", doc("Same"))]
        bundle, diags = load_bundle(documents, "d")
        assert bundle is None
        assert "E010" in codes(diags)

    def test_duplicate_is_case_insensitive(self):
        documents = [("a.md", doc("GetStatus")), ("b.md", doc("getstatus"))]
        bundle, diags = load_bundle(documents, "d")
        assert bundle is None
        assert "E010" in codes(diags)

    def test_empty_bundle_is_valid_with_w011(self):
        bundle, diags = load_bundle([], "d")
        assert bundle is not None
        assert bundle.tools == []
        assert codes(diags) == ["W011"]

    def test_order_preserved(self):
        documents = [("b.md", doc("Bravo")), ("a.md", doc("Alpha"))]
        bundle, _ = load_bundle(documents, "d")
        assert bundle.tool_names() == ["Bravo", "Alpha"]


class TestValidateBundle:
    def test_identical_shared_param_no_w020(self, bundle):
        diags = validate_bundle(bundle)
        assert "W020" not in codes(diags)

    def test_diverging_param_kind_is_w020(self):
        documents = [
            ("a.md", doc("ATool", extra="\n## Inputs\n- id (string): the identifier\n")),
            ("b.md", doc("BTool", extra="\n## Inputs\n- id (integer): the identifier\n")),
        ]
        bundle, diags = load_bundle(documents, "d")
        assert bundle is not None
        w020 = [d for d in diags if d.code == "W020"]
        assert len(w020) == 1
        assert "ATool" in w020[0].message and "BTool" in w020[0].message

    def test_diverging_description_is_w020(self):
        documents = [
            ("a.md", doc("ATool", extra="\n## Inputs\n- id (string): machine identifier\n")),
            ("b.md", doc("BTool", extra="\n## Inputs\n- id (string): order identifier\n")),
        ]
        _, diags = load_bundle(documents, "d")
        assert "W020" in codes(diags)

    def test_link_to_missing_tool_is_e021(self):
        documents = [
            ("a.md", doc("ATool", extra="\n## Related Tools\n- after GetDowntimeReason cues: why\n")),
        ]
        bundle, diags = load_bundle(documents, "d")
        assert bundle is None
        e021 = [d for d in diags if d.code == "E021"]
        assert len(e021) == 1
        assert "GetDowntimeReason" in e021[0].message

    def test_alias_claimed_by_different_params_is_w022(self):
        documents = [
            ("a.md", doc("ATool", extra="\n## Inputs\n- machine_id (string): the machine | aliases: line\n")),
            ("b.md", doc("BTool", extra="\n## Inputs\n- conveyor_id (string): the conveyor | aliases: line\n")),
        ]
        bundle, diags = load_bundle(documents, "d")
        assert bundle is not None
        w022 = [d for d in diags if d.code == "W022"]
        assert len(w022) == 1
        assert "machine_id" in w022[0].message and "conveyor_id" in w022[0].message

    def test_same_param_sharing_alias_is_not_w022(self, bundle):
        # machine_id carries the same aliases in five demo tools
        assert "W022" not in codes(validate_bundle(bundle))

    def test_order_insensitive_multiset_of_codes(self, demo_documents):
        mutated = [
            ("x.md", doc("XTool", extra="\n## Inputs\n- id (string): one thing\n")),
            ("y.md", doc("YTool", extra="\n## Inputs\n- id (integer): another thing | aliases: shared\n")),
            ("z.md", doc("ZTool", extra="\n## Inputs\n- other (string): more | aliases: shared\n")),
        ]
        rng = random.Random(99)
        baseline = None
        for _ in range(6):
            shuffled = mutated[:]
            rng.shuffle(shuffled)
            bundle, diags = load_bundle(shuffled, "d")
            observed = codes(diags)
            if baseline is None:
                baseline = observed
            assert observed == baseline
