"""
Defines a TrainingListener class that holds a callback for a training event.
"""

from typing import Callable

EVENTS = ("epoch", "finished")


class TrainingListener:
    """A callback for one training event.

    `epoch` listeners get `(record)` after every epoch, `finished` listeners get `(history)` once.
    """

    def __init__(self, function: Callable, event: str):
        if event not in EVENTS:
            raise ValueError(f"unknown training event {event!r}, expected one of {EVENTS}")
        self.func = function
        self.event_name = event

    def __call__(self, payload):
        return self.func(payload)


def dispatch(listeners: list[TrainingListener] | None, event: str, payload):
    for listener in listeners or ():
        if listener.event_name == event:
            listener(payload)
