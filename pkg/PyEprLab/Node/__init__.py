"""PyEprLab Node."""
import logging

_LOGGER = logging.getLogger(__name__)


class Node(object):
    """Base object for the other PyEprLab value types.

    Nodes are immutable once built: attributes are only set in __init__
    and exposed through read-only properties.
    """

    def __init__(self, classname=None, description=None):
        """Initializes Node object.

        classname: Name of the class, used in descriptions and dumps.
        description: Free text label (default None).
        """
        # Name of class
        self._classname = classname
        # Description of the object
        self._description = description

    def state_save(self):
        """Returns a JSON ready dict describing this node."""
        state = {}
        if self._description is not None:
            state['description'] = self._description
        return state

    @classmethod
    def state_load(cls, state):
        """Builds a node from a dict produced by state_save."""
        raise NotImplementedError(cls.__name__ + '.state_load')

    @property
    def classname(self):
        """Returns the class name of this class."""
        return self._classname

    @property
    def description(self):
        """Returns the description of this node."""
        return self._description

    def description_pretty(self, prefix='Node'):
        """Object description, as text string (auto-generated if not set).

        prefix: Prefix to auto-generate with.
        """
        if (self._description is None) or (self._description == ''):
            return prefix + ' ' + self._classname
        return self._description

    def __eq__(self, other):
        if not isinstance(other, Node) or other.classname != self.classname:
            return NotImplemented
        return self.state_save() == other.state_save()

    def __hash__(self):
        return hash((self._classname, repr(sorted(self.state_save().items()))))

    def __repr__(self):
        return '{}({})'.format(self._classname, self.state_save())
