"""Exception types shared across the toolkit."""


class SensevecError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SensevecError):
    """Invalid pipeline configuration; message carries field-level details."""


# --- inventory ---

class MalformedRecord(SensevecError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        super().__init__(f"malformed inventory record at line {line_no}: {reason}")


class DanglingReference(SensevecError):
    def __init__(self, ref_id):
        self.ref_id = ref_id
        super().__init__(f"reference to unknown synset id: {ref_id}")


class UnknownSense(SensevecError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"unknown sense: {key}")


# --- corpus ---

class MalformedXml(SensevecError):
    pass


class UnknownInstanceInKeys(SensevecError):
    def __init__(self, instance_id):
        self.instance_id = instance_id
        super().__init__(f"key file references unknown instance: {instance_id}")


class NoCandidates(SensevecError):
    """Instances whose lemma/pos have no inventory candidates (version mismatch)."""

    def __init__(self, instance_ids):
        self.instance_ids = list(instance_ids)
        preview = ", ".join(self.instance_ids[:5])
        super().__init__(
            f"{len(self.instance_ids)} instance(s) without inventory candidates: {preview}"
        )


# --- embedstore ---

class BadMagic(SensevecError):
    pass


class ShapeMismatch(SensevecError):
    pass


class TruncatedFile(SensevecError):
    pass


class LayerCountMismatch(SensevecError):
    pass


class EmptyInput(SensevecError):
    pass


# --- profiles ---

class NonPositiveTemperature(SensevecError):
    pass


class TooFewLayers(SensevecError):
    pass


class UnrepresentedGoldSense(SensevecError):
    def __init__(self, instance_id):
        self.instance_id = instance_id
        super().__init__(f"gold sense of instance {instance_id} not represented in train")


# --- senselearn ---

class MissingRecord(SensevecError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"store record missing: {key}")


class UncoveredLexname(SensevecError):
    def __init__(self, lexname):
        self.lexname = lexname
        super().__init__(f"no represented sense under lexname: {lexname}")


class KeySetMismatch(SensevecError):
    pass


class ZeroVector(SensevecError):
    def __init__(self, sense_id):
        self.sense_id = sense_id
        super().__init__(f"zero-norm vector for sense: {sense_id}")


class MalformedHeader(SensevecError):
    pass


class DimMismatch(SensevecError):
    pass


# --- senseindex ---

class EmptyCandidates(SensevecError):
    pass


# --- evaltasks ---

class DegenerateSeries(SensevecError):
    pass


class DimError(SensevecError):
    pass


class MissingSense(SensevecError):
    def __init__(self, sense_id):
        self.sense_id = sense_id
        super().__init__(f"sense missing from embedding set: {sense_id}")


class DegenerateClustering(SensevecError):
    pass
