from commands.analyze import cmd_analyze
from commands.sample import cmd_sample
from commands.simulate import cmd_simulate

__all__ = ["cmd_analyze", "cmd_sample", "cmd_simulate"]
