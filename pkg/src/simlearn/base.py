"""Estimator plumbing: parameter introspection and fitted-state checks."""

import inspect

from .exceptions import NotFittedError


class ParamsMixin:
    """get_params/set_params backed by the subclass's __init__ signature.

    Subclasses must store every constructor argument verbatim on an
    attribute of the same name and do no other work in __init__.
    """

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **updates):
        valid = set(self._param_names())
        for name, value in updates.items():
            if name not in valid:
                raise ValueError(
                    f"unknown parameter {name!r} for {type(self).__name__}"
                )
            setattr(self, name, value)
        return self


def check_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
