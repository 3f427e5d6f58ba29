"""Exception hierarchy shared by every stage of the pipeline."""


class AdaptPlanError(Exception):
    """Base class for all errors raised by this package."""


class MalformedConditionError(AdaptPlanError):
    pass


class InconsistentApplicationError(AdaptPlanError):
    pass


class PlanSyntaxError(AdaptPlanError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GroundingError(PlanSyntaxError):
    pass


class UnsupportedFeatureError(AdaptPlanError):
    def __init__(self, construct):
        self.construct = construct
        super().__init__(f"unsupported PDDL construct: {construct}")


class InvalidPlanError(AdaptPlanError):
    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class NetworkInconsistencyError(AdaptPlanError):
    pass


class CapacityError(AdaptPlanError):
    pass


class PlannerFailure(AdaptPlanError):
    pass


class ProtocolError(AdaptPlanError):
    pass
