class ExtractorError(Exception):
    pass


class SpanAlignmentFailure(ExtractorError):
    def __init__(self, instance_id, detail=""):
        self.instance_id = instance_id
        super().__init__(f"cannot align span for {instance_id}: {detail}")


class SequenceTooLong(ExtractorError):
    pass


class SourceMissing(ExtractorError):
    pass


class VersionMismatch(ExtractorError):
    pass
