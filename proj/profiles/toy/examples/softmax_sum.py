import toyflow as tf

class Model(tf.Module):
    def forward(self, x):
        s = tf.softmax(x, dim=-1)
        return tf.sum(s, dim=0)

x = tf.rand(4, 5)
inputs = [x]
