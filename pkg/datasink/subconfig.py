# Import any required subscribers here. The subscribers should implement the
# Subscriber class from subscribers.py
import datasink.subscribers as subs

def default_system(verbose=1):
    """Subscriber system with the default subscribers registered. Report
    and trace file writers are added by lab.run per experiment."""
    system = subs.SubscriberSystem()

    # Register the desired subscribers here
    system.register_subscriber(subs.PrintSubscriber(verbose))
    return system
